//! Finite-volume entropic functionals, fluxes and entropy production from
//! one-particle determinant formulas.
//!
//! Everything is evaluated in the eigenbasis of `h`, where `e^{ith}` is diagonal and
//! conjugation by it is an elementwise phase. Log-determinants are sums of
//! `log(1 + λ)` over eigenvalues of Gram matrices `C C^*`, obtained from the
//! singular values of `C`.

use faer::complex_native::c64;
use faer::{Mat, MatRef};

use crate::chain::{FiniteChain, Side};
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eigenvalues, herm_map, hermitize, log1p_exp, log_det_one_plus_gram_power, sym_eig, sym_reconstruct,
    to_complex, CMat, HermitianMatrix,
};

/// Largest admissible exponent (natural log units) inside any matrix exponential.
pub const OVERFLOW_LIMIT: f64 = 700.0;

/// Sites kept free between the light cone and the truncation edge for GC.
pub const GC_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// `e_{p,t}`; `p = f64::INFINITY` selects the variational functional.
    Pressure(f64),
    /// Evans–Searles functional.
    Es,
    /// Gallavotti–Cohen functional prepared for time `s`.
    Gc(f64),
}

impl FunctionalKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            FunctionalKind::Pressure(p) if !(p > 0.0) => {
                Err(Error::Validation(format!("pressure exponent p = {p} must be positive")))
            }
            FunctionalKind::Gc(s) if !s.is_finite() => Err(Error::Validation("preparation time must be finite".into())),
            k => Ok(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    /// Gram eigenvalues floored before a fractional power.
    pub floored: usize,
    /// GC only: the light cone of `s + t` reaches the truncation edge.
    pub light_cone_violated: bool,
}

/// Spectral data of one finite chain shared by every functional.
#[derive(Debug, Clone)]
pub struct Dynamics<'a> {
    chain: &'a FiniteChain,
    energies: Vec<f64>,
    modes: Mat<f64>,
    kappa: Vec<f64>,
    /// `U^T W`: eigenvectors of `k` expressed in the eigenbasis of `h`.
    q: Mat<f64>,
}

impl<'a> Dynamics<'a> {
    pub fn new(chain: &'a FiniteChain) -> Self {
        let eh = sym_eig(chain.h.as_ref());
        let ek = sym_eig(chain.k.as_ref());
        let q = eh.vectors.transpose() * &ek.vectors;
        Self { chain, energies: eh.values, modes: eh.vectors, kappa: ek.values, q }
    }

    pub fn chain(&self) -> &FiniteChain {
        self.chain
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenvalues of `h`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn k_norm(&self) -> f64 {
        self.kappa.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `f(k)` in the eigenbasis of `h`.
    fn k_fn(&self, f: impl Fn(f64) -> f64) -> Mat<f64> {
        let d: Vec<f64> = self.kappa.iter().map(|&x| f(x)).collect();
        sym_reconstruct(self.q.as_ref(), &d)
    }

    /// `e^{ith} a e^{-ith}` for `a` given in the eigenbasis of `h`.
    fn rotate(&self, a: MatRef<'_, f64>, t: f64) -> CMat {
        let e = &self.energies;
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
            let (s, c) = (t * (e[i] - e[j])).sin_cos();
            let x = a.read(i, j);
            c64::new(x * c, x * s)
        })
    }

    fn to_site_basis(&self, a: MatRef<'_, c64>) -> CMat {
        let u = to_complex(self.modes.as_ref());
        &u * a * u.transpose()
    }

    fn log_det_one_plus_exp_k(&self) -> f64 {
        self.kappa.iter().map(|&x| log1p_exp(x)).sum()
    }

    /// `k_t = e^{ith} k e^{-ith}` on the site basis.
    pub fn k_at(&self, t: f64) -> HermitianMatrix {
        let kt = self.rotate(self.k_fn(|x| x).as_ref(), t);
        let site = self.to_site_basis(kt.as_ref());
        HermitianMatrix::new(hermitize(site.as_ref())).expect("unitary conjugate is Hermitian")
    }

    fn guard(&self, bound: f64) -> Result<()> {
        if bound > OVERFLOW_LIMIT {
            Err(Error::Overflow { bound, limit: OVERFLOW_LIMIT })
        } else {
            Ok(())
        }
    }

    /// `e^{alpha (k_t - k) / 2}` in the eigenbasis of `h`.
    fn half_exp_entropy_change(&self, t: f64, alpha: f64) -> CMat {
        let kt = self.k_fn(|x| x);
        let rotated = self.rotate(kt.as_ref(), t);
        let n = self.dim();
        let delta =
            Mat::from_fn(n, n, |i, j| (rotated.read(i, j) - c64::new(kt.read(i, j), 0.0)) * c64::new(alpha, 0.0));
        herm_map(hermitize(delta.as_ref()).as_ref(), |x| (0.5 * x).exp())
    }

    pub fn functional(&self, kind: FunctionalKind, t: f64, alpha: f64) -> Result<FunctionalValue> {
        let kind = kind.validate()?;
        let norm = self.k_norm();
        let reference = self.log_det_one_plus_exp_k();
        let mut out = FunctionalValue { value: 0.0, floored: 0, light_cone_violated: false };
        let raw = match kind {
            FunctionalKind::Pressure(p) if p.is_infinite() => {
                self.guard((alpha.abs() + (1.0 - alpha).abs()) * norm)?;
                let k = self.k_fn(|x| x);
                let back = self.rotate(k.as_ref(), -t);
                let n = self.dim();
                let z = Mat::from_fn(n, n, |i, j| {
                    c64::new((1.0 - alpha) * k.read(i, j), 0.0) + back.read(i, j) * c64::new(alpha, 0.0)
                });
                herm_eigenvalues(hermitize(z.as_ref()).as_ref()).into_iter().map(log1p_exp).sum()
            }
            FunctionalKind::Pressure(p) => {
                self.guard((alpha.abs() + (1.0 - alpha).abs()) * norm * (1.0f64).max(1.0 / p))?;
                let a = to_complex(self.k_fn(|x| ((1.0 - alpha) * x / p).exp()).as_ref());
                let b = self.rotate(self.k_fn(|x| (alpha * x / p).exp()).as_ref(), -t);
                let c = &a * &b;
                let (v, floored) = log_det_one_plus_gram_power(c.as_ref(), p / 2.0);
                out.floored = floored;
                v
            }
            FunctionalKind::Es => {
                self.guard((1.0 + 2.0 * alpha.abs()) * norm)?;
                let a = to_complex(self.k_fn(|x| (0.5 * x).exp()).as_ref());
                let c = &a * self.half_exp_entropy_change(t, alpha);
                log_det_one_plus_gram_power(c.as_ref(), 1.0).0
            }
            FunctionalKind::Gc(s) => {
                self.guard((1.0 + 2.0 * alpha.abs()) * norm)?;
                out.light_cone_violated = !self.light_cone_ok(s.abs() + t.abs());
                let a = self.rotate(self.k_fn(|x| (0.5 * x).exp()).as_ref(), -s);
                let c = &a * self.half_exp_entropy_change(t, alpha);
                log_det_one_plus_gram_power(c.as_ref(), 1.0).0
            }
        };
        out.value = raw - reference;
        Ok(out)
    }

    /// Whether excitations launched from the window stay `GC_MARGIN` sites away from
    /// the truncation edge for `time`.
    pub fn light_cone_ok(&self, time: f64) -> bool {
        let spec = &self.chain.spec;
        let (jmax, _, _) = spec.bounds();
        let inner = spec.window_radius().max(spec.n() + 1) as f64;
        self.chain.m as f64 - inner >= 2.0 * jmax * time + GC_MARGIN
    }

    /// `T = (1 + e^{-k})^{-1}` in the eigenbasis of `h`.
    fn density(&self) -> Mat<f64> {
        self.k_fn(|x| 1.0 / (1.0 + (-x).exp()))
    }

    /// `omega(Sigma^t) = tr(T (k - k_t)) / t`.
    pub fn mean_entropy_production(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let tm = self.density();
        let k = self.k_fn(|x| x);
        let e = &self.energies;
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let phase = (t * (e[j] - e[i])).cos();
                acc += tm.read(i, j) * k.read(j, i) * (1.0 - phase);
            }
        }
        acc / t
    }

    /// `tr(T e^{ith} phi e^{-ith})` with `phi = i [h_side, v_side]`.
    pub fn heat_flux(&self, t: f64, side: Side) -> f64 {
        let c = self.chain.flux_generator(side);
        let n = self.dim();
        let support: Vec<usize> = (0..n).filter(|&i| (0..n).any(|j| c.read(i, j) != 0.0)).collect();
        let tm = self.density();
        let e = &self.energies;
        let phased = |row: usize, sign: f64| -> Vec<c64> {
            (0..n)
                .map(|i| {
                    let (s, co) = (sign * t * e[i]).sin_cos();
                    c64::new(co, s) * self.modes.read(row, i)
                })
                .collect()
        };
        let mut total = 0.0;
        for &a in &support {
            let z = phased(a, 1.0);
            let w: Vec<c64> =
                (0..n).map(|i| (0..n).fold(c64::new(0.0, 0.0), |acc, j| acc + z[j] * tm.read(i, j))).collect();
            for &b in &support {
                let cab = c.read(a, b);
                if cab == 0.0 {
                    continue;
                }
                let y = phased(b, -1.0);
                let m_ba = (0..n).fold(c64::new(0.0, 0.0), |acc, i| acc + y[i] * w[i]);
                total += (c64::new(0.0, cab) * m_ba).re;
            }
        }
        total
    }
}

pub fn evolve_k(chain: &FiniteChain, t: f64) -> HermitianMatrix {
    Dynamics::new(chain).k_at(t)
}

pub fn entropic_functional(chain: &FiniteChain, kind: FunctionalKind, t: f64, alpha: f64) -> Result<f64> {
    Ok(Dynamics::new(chain).functional(kind, t, alpha)?.value)
}

pub fn mean_entropy_production(chain: &FiniteChain, t: f64) -> f64 {
    Dynamics::new(chain).mean_entropy_production(t)
}

pub fn heat_flux(chain: &FiniteChain, t: f64, side: Side) -> f64 {
    Dynamics::new(chain).heat_flux(t, side)
}
