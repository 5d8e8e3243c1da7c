//! Large-time limits as integrals over the common band.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::linalg::log1p_exp;
use crate::quad::integrate_band;
use crate::scattering::{ac_band, detect_bound_states, scattering_matrix, AcBand, SMatrix};

pub type C2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn c2_mul(x: &C2, y: &C2) -> C2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn c2_adjoint(x: &C2) -> C2 {
    [[x[0][0].conj(), x[1][0].conj()], [x[0][1].conj(), x[1][1].conj()]]
}

fn c2_diag(d: [f64; 2]) -> C2 {
    [[Complex64::new(d[0], 0.0), ZERO], [ZERO, Complex64::new(d[1], 0.0)]]
}

fn c2_inverse(x: &C2) -> C2 {
    let det = x[0][0] * x[1][1] - x[0][1] * x[1][0];
    [[x[1][1] / det, -x[0][1] / det], [-x[1][0] / det, x[0][0] / det]]
}

/// Hermitian `[[a, b], [conj(b), d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Herm2 {
    pub a: f64,
    pub d: f64,
    pub b: Complex64,
}

impl Herm2 {
    pub fn diag(x: f64, y: f64) -> Self {
        Self { a: x, d: y, b: ZERO }
    }

    /// Hermitian part of a general 2x2 matrix.
    pub fn from_c2(x: &C2) -> Self {
        Self { a: x[0][0].re, d: x[1][1].re, b: 0.5 * (x[0][1] + x[1][0].conj()) }
    }

    pub fn to_c2(self) -> C2 {
        [[Complex64::new(self.a, 0.0), self.b], [self.b.conj(), Complex64::new(self.d, 0.0)]]
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b.norm_sqr()
    }

    fn centre_radius(self) -> (f64, f64) {
        (0.5 * (self.a + self.d), (0.5 * (self.a - self.d)).hypot(self.b.norm()))
    }

    /// `(lower, upper)` eigenvalues.
    pub fn eigenvalues(self) -> (f64, f64) {
        let (mu, r) = self.centre_radius();
        (mu - r, mu + r)
    }

    /// `f(A) = c0 I + c1 (A - mu I)` with `c1` the divided difference of `f`.
    fn apply(self, c0: f64, c1: f64, mu: f64) -> Self {
        Self { a: c0 + c1 * (self.a - mu), d: c0 + c1 * (self.d - mu), b: self.b * c1 }
    }

    pub fn exp(self) -> Self {
        let (mu, r) = self.centre_radius();
        let e = mu.exp();
        let sinhc = if r < 1e-8 { 1.0 + r * r / 6.0 } else { r.sinh() / r };
        self.apply(e * r.cosh(), e * sinhc, mu)
    }

    pub fn powf(self, q: f64) -> Self {
        let (mu, r) = self.centre_radius();
        let (lo, hi) = (mu - r, mu + r);
        if r < 1e-8 * mu.abs() {
            return self.apply(mu.powf(q), q * mu.powf(q - 1.0), mu);
        }
        let (fl, fh) = (lo.powf(q), hi.powf(q));
        self.apply(0.5 * (fl + fh), (fh - fl) / (2.0 * r), mu)
    }

    /// `log det(1 + A)` for positive `A`.
    pub fn log_det_one_plus(self) -> f64 {
        log_det_one_plus_from(self.trace(), self.det())
    }
}

/// `log det(1 + A)` for a positive 2x2 matrix known through its trace and determinant.
fn log_det_one_plus_from(tr: f64, det: f64) -> f64 {
    let hi = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    let lo = if hi > 0.0 { det / hi } else { 0.0 };
    hi.ln_1p() + lo.ln_1p()
}

/// `k_0(E) = diag(-beta_l E, -beta_r E)`.
pub fn k0(e: f64, betas: (f64, f64)) -> [f64; 2] {
    [-betas.0 * e, -betas.1 * e]
}

/// `s^* k_0 s`.
fn conj_k0(s: &SMatrix, k: [f64; 2]) -> Herm2 {
    Herm2::from_c2(&c2_mul(&c2_mul(&s.adjoint().s, &c2_diag(k)), &s.s))
}

/// `s k_0 s^*`.
fn conj_k0_rev(s: &SMatrix, k: [f64; 2]) -> Herm2 {
    Herm2::from_c2(&c2_mul(&c2_mul(&s.s, &c2_diag(k)), &s.adjoint().s))
}

/// `A = s^* k_0 s - k_0`.
fn entropy_jump(s: &SMatrix, k: [f64; 2]) -> Herm2 {
    let m = conj_k0(s, k);
    Herm2 { a: m.a - k[0], d: m.d - k[1], b: m.b }
}

/// `e^{k0/2} X e^{k0/2}` for Hermitian `X`.
fn sandwich(x: Herm2, k: [f64; 2]) -> Herm2 {
    let (p, q) = ((0.5 * k[0]).exp(), (0.5 * k[1]).exp());
    Herm2 { a: p * p * x.a, d: q * q * x.d, b: x.b * (p * q) }
}

/// `K_alpha(E) = e^{k0/2} e^{alpha (s^* k0 s - k0)} e^{k0/2}`.
pub fn k_alpha(e: f64, alpha: f64, s: &SMatrix, betas: (f64, f64)) -> Herm2 {
    let k = k0(e, betas);
    let a = entropy_jump(s, k);
    sandwich(Herm2 { a: alpha * a.a, d: alpha * a.d, b: a.b * alpha }.exp(), k)
}

/// `K_{alpha,p}(E)`; `p = inf` gives `e^{(1-alpha) k0 + alpha s k0 s^*}`.
pub fn k_alpha_p(e: f64, alpha: f64, p: f64, s: &SMatrix, betas: (f64, f64)) -> Herm2 {
    let k = k0(e, betas);
    if p.is_infinite() {
        let m = conj_k0_rev(s, k);
        return Herm2 { a: (1.0 - alpha) * k[0] + alpha * m.a, d: (1.0 - alpha) * k[1] + alpha * m.d, b: m.b * alpha }
            .exp();
    }
    pressure_core(k, alpha, p, s).powf(0.5 * p)
}

/// `e^{(1-alpha) k0 / p} s e^{2 alpha k0 / p} s^* e^{(1-alpha) k0 / p}`.
fn pressure_core(k: [f64; 2], alpha: f64, p: f64, s: &SMatrix) -> Herm2 {
    let inner = [(2.0 * alpha * k[0] / p).exp(), (2.0 * alpha * k[1] / p).exp()];
    let mid = Herm2::from_c2(&c2_mul(&c2_mul(&s.s, &c2_diag(inner)), &s.adjoint().s));
    let outer = [2.0 * (1.0 - alpha) * k[0] / p, 2.0 * (1.0 - alpha) * k[1] / p];
    sandwich(mid, outer)
}

fn log_det_one_plus_k0(k: [f64; 2]) -> f64 {
    log1p_exp(k[0]) + log1p_exp(k[1])
}

/// `log det(1 + K_alpha) - log det(1 + K_0)`.
fn e_plus_density(s: &SMatrix, alpha: f64, betas: (f64, f64)) -> f64 {
    let k = k0(s.e, betas);
    let kk = k_alpha(s.e, alpha, s, betas);
    log_det_one_plus_from(kk.trace(), (k[0] + k[1]).exp()) - log_det_one_plus_k0(k)
}

fn e_p_plus_density(s: &SMatrix, p: f64, alpha: f64, betas: (f64, f64)) -> f64 {
    let k = k0(s.e, betas);
    let base = log_det_one_plus_k0(k);
    if p.is_infinite() {
        let m = conj_k0_rev(s, k);
        let x = Herm2 { a: (1.0 - alpha) * k[0] + alpha * m.a, d: (1.0 - alpha) * k[1] + alpha * m.d, b: m.b * alpha };
        let (lo, hi) = x.eigenvalues();
        return log1p_exp(lo) + log1p_exp(hi) - base;
    }
    let y = pressure_core(k, alpha, p, s);
    let tr = y.trace();
    let det = (2.0 * (k[0] + k[1]) / p).exp();
    let hi = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    let lo = det / hi;
    log1p_exp(0.5 * p * hi.ln()) + log1p_exp(0.5 * p * lo.ln()) - base
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn cosh_density(e: f64, alpha: f64, betas: (f64, f64)) -> f64 {
    let (bl, br) = betas;
    log_cosh((bl * (1.0 - alpha) + br * alpha) * e / 2.0) + log_cosh((br * (1.0 - alpha) + bl * alpha) * e / 2.0)
        - log_cosh(bl * e / 2.0)
        - log_cosh(br * e / 2.0)
}

/// `E |s_lr|^2 sinh(dbeta E / 2) / (cosh(beta_r E / 2) cosh(beta_l E / 2))`, `dbeta = beta_r - beta_l`.
fn flux_density(s: &SMatrix, betas: (f64, f64)) -> f64 {
    let (bl, br) = betas;
    let e = s.e;
    let ratio = (0.5 * (br - bl) * e).sinh() / ((0.5 * br * e).cosh() * (0.5 * bl * e).cosh());
    e * s.s_lr().norm_sqr() * ratio
}

/// `tr((e^{alpha A} + e^{-k0})^{-1} A (e^{-alpha A} + e^{k0})^{-1} A)`.
fn variance_density(s: &SMatrix, alpha: f64, betas: (f64, f64)) -> f64 {
    let k = k0(s.e, betas);
    let a = entropy_jump(s, k);
    let scaled = |c: f64| Herm2 { a: c * a.a, d: c * a.d, b: a.b * c }.exp();
    let mut x = scaled(alpha);
    x.a += (-k[0]).exp();
    x.d += (-k[1]).exp();
    let mut y = scaled(-alpha);
    y.a += k[0].exp();
    y.d += k[1].exp();
    let am = a.to_c2();
    let prod = c2_mul(&c2_mul(&c2_mul(&c2_inverse(&x.to_c2()), &am), &c2_inverse(&y.to_c2())), &am);
    (prod[0][0] + prod[1][1]).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LimitKind {
    EPlus,
    /// `e_{p,+}`; `p = inf` allowed.
    EPPlus(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NessFlux {
    pub flux_l: f64,
    pub flux_r: f64,
    pub sigma_plus: f64,
}

pub const DEFAULT_TOL: f64 = 1e-8;

/// Richardson steps for derivatives in `alpha`.
pub const DIFF_STEPS: (f64, f64) = (1e-3, 5e-4);

/// Difference quotients carry roundoff near `1e-16 / h^2`, so their band integrals
/// are not requested below this tolerance.
pub const DERIVATIVE_TOL_FLOOR: f64 = 1e-9;

/// A chain together with everything the band integrals need.
#[derive(Debug, Clone)]
pub struct LimitModel {
    pub spec: ChainSpec,
    pub band: AcBand,
    pub tol: f64,
    pub bound_states: Vec<f64>,
}

impl LimitModel {
    pub fn new(spec: &ChainSpec, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Validation(format!("quadrature tolerance must be positive, got {tol}")));
        }
        Ok(Self { spec: spec.clone(), band: ac_band(spec), tol, bound_states: detect_bound_states(spec) })
    }

    pub fn betas(&self) -> (f64, f64) {
        (self.spec.beta_l, self.spec.beta_r)
    }

    /// Identically zero functionals: empty band or equal temperatures.
    pub fn is_trivial(&self) -> bool {
        self.band.is_empty() || self.spec.beta_l == self.spec.beta_r
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.bound_states.is_empty() {
            Vec::new()
        } else {
            vec![format!("hypothesis violated: h not purely a.c. (bound states at {:?})", self.bound_states)]
        }
    }

    /// `int_band f(s(E)) dE / 2pi` to the model tolerance.
    pub fn band_integral(&self, f: impl Fn(&SMatrix) -> f64) -> Result<f64> {
        self.band_integral_to(f, self.tol)
    }

    fn band_integral_to(&self, f: impl Fn(&SMatrix) -> f64, tol: f64) -> Result<f64> {
        let Some((lo, hi)) = self.band.common else {
            return Ok(0.0);
        };
        let failure = RefCell::new(None);
        let q = integrate_band(
            |e| match scattering_matrix(&self.spec, e) {
                Ok(s) => f(&s),
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    0.0
                }
            },
            lo,
            hi,
            2.0 * PI * tol,
        )?;
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        Ok(q.value / (2.0 * PI))
    }

    fn density(&self, kind: LimitKind, s: &SMatrix, alpha: f64) -> f64 {
        match kind {
            LimitKind::EPlus => e_plus_density(s, alpha, self.betas()),
            LimitKind::EPPlus(p) => e_p_plus_density(s, p, alpha, self.betas()),
        }
    }

    pub fn value(&self, kind: LimitKind, alpha: f64) -> Result<f64> {
        if let LimitKind::EPPlus(p) = kind {
            if !(p > 0.0) {
                return Err(Error::Validation(format!("p must be positive, got {p}")));
            }
        }
        if self.is_trivial() {
            return Ok(0.0);
        }
        self.band_integral(|s| self.density(kind, s, alpha))
    }

    pub fn e_plus(&self, alpha: f64) -> Result<f64> {
        self.value(LimitKind::EPlus, alpha)
    }

    pub fn e_p_plus(&self, p: f64, alpha: f64) -> Result<f64> {
        self.value(LimitKind::EPPlus(p), alpha)
    }

    /// First (`order = 1`) or second (`order = 2`) derivative in `alpha`, from
    /// Richardson-extrapolated central differences taken under the integral.
    pub fn derivative(&self, kind: LimitKind, alpha: f64, order: u8) -> Result<f64> {
        if self.is_trivial() {
            return Ok(0.0);
        }
        let (h1, h2) = DIFF_STEPS;
        let diff = |s: &SMatrix, h: f64| -> f64 {
            let f = |a: f64| self.density(kind, s, a);
            match order {
                1 => (f(alpha + h) - f(alpha - h)) / (2.0 * h),
                _ => (f(alpha + h) - 2.0 * f(alpha) + f(alpha - h)) / (h * h),
            }
        };
        if !(order == 1 || order == 2) {
            return Err(Error::Validation(format!("derivative order {order} not supported")));
        }
        let ratio = (h1 / h2).powi(2);
        let tol = self.tol.max(DERIVATIVE_TOL_FLOOR);
        self.band_integral_to(|s| (ratio * diff(s, h2) - diff(s, h1)) / (ratio - 1.0), tol)
    }

    /// `e_+''(alpha)` from the trace formula for the second derivative.
    pub fn second_derivative_direct(&self, alpha: f64) -> Result<f64> {
        if self.is_trivial() {
            return Ok(0.0);
        }
        self.band_integral(|s| variance_density(s, alpha, self.betas()))
    }

    pub fn ness_flux(&self) -> Result<NessFlux> {
        let (bl, br) = self.betas();
        if self.is_trivial() {
            return Ok(NessFlux { flux_l: 0.0, flux_r: 0.0, sigma_plus: 0.0 });
        }
        let flux_l = 0.5 * self.band_integral(|s| flux_density(s, (bl, br)))?;
        Ok(NessFlux { flux_l, flux_r: -flux_l, sigma_plus: (br - bl) * flux_l })
    }
}

/// Band integral of the reflectionless closed form for `e_+(alpha)`.
pub fn e_plus_reflectionless_closed(betas: (f64, f64), band: &AcBand, alpha: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = band.common.ok_or(Error::EmptyBand)?;
    let q = integrate_band(|e| cosh_density(e, alpha, betas), lo, hi, 2.0 * PI * tol)?;
    Ok(q.value / (2.0 * PI))
}

pub fn ness_flux(spec: &ChainSpec, tol: f64) -> Result<NessFlux> {
    LimitModel::new(spec, tol)?.ness_flux()
}

pub fn e_plus(spec: &ChainSpec, alpha: f64, tol: f64) -> Result<f64> {
    LimitModel::new(spec, tol)?.e_plus(alpha)
}

pub fn e_p_plus(spec: &ChainSpec, p: f64, alpha: f64, tol: f64) -> Result<f64> {
    LimitModel::new(spec, tol)?.e_p_plus(p, alpha)
}
