//! Brute-force many-body XY chain on `2M + 1 <= 11` sites.
//!
//! Basis states are tensor products with site `-M` as the leftmost factor and
//! spin up (`sigma^3 = +1`) read as an occupied fermion mode.

use faer::complex_native::c64;
use faer::{Mat, MatRef};

use crate::chain::{ChainSpec, FiniteChain, Side};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, hermitize, log_sum_exp, sym_eig, sym_reconstruct, SymEig};

pub const MAX_SITES: usize = 11;

/// Absolute tolerance for grouping eigenvalues of `S` into spectral projections.
pub const GROUPING_TOL: f64 = 1e-9;

fn pauli(rows: [[f64; 2]; 2]) -> Mat<f64> {
    Mat::from_fn(2, 2, |i, j| rows[i][j])
}

fn sigma_plus() -> Mat<f64> {
    pauli([[0.0, 1.0], [0.0, 0.0]])
}

fn sigma_minus() -> Mat<f64> {
    pauli([[0.0, 0.0], [1.0, 0.0]])
}

fn sigma_z() -> Mat<f64> {
    pauli([[1.0, 0.0], [0.0, -1.0]])
}

pub fn kron(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a.read(i / br, j / bc) * b.read(i % br, j % bc))
}

/// `1 ⊗ op ⊗ 1` with `op` acting on sites `first .. first + width`.
fn embed(n_sites: usize, first: usize, op: MatRef<'_, f64>) -> Mat<f64> {
    let width = op.nrows().trailing_zeros() as usize;
    let left = Mat::<f64>::identity(1 << first, 1 << first);
    let rest = n_sites - first - width;
    let right = Mat::<f64>::identity(1 << rest, 1 << rest);
    kron(kron(left.as_ref(), op).as_ref(), right.as_ref())
}

/// `(sigma^1 sigma^1 + sigma^2 sigma^2) / 2` on two neighbouring sites.
fn hopping() -> Mat<f64> {
    kron(sigma_plus().as_ref(), sigma_minus().as_ref()) + kron(sigma_minus().as_ref(), sigma_plus().as_ref())
}

/// `1/2 sum_x J_x (s1 s1 + s2 s2) + 1/2 sum_x lambda_x s3` on `fields.len()` sites;
/// `couplings[i]` joins sites `i` and `i + 1`.
pub fn spin_hamiltonian(couplings: &[f64], fields: &[f64]) -> Mat<f64> {
    let n = fields.len();
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    let hop = hopping();
    for (i, &j) in couplings.iter().enumerate().take(n.saturating_sub(1)) {
        if j != 0.0 {
            h += embed(n, i, hop.as_ref()) * faer::scale(j);
        }
    }
    let sz = sigma_z();
    for (i, &l) in fields.iter().enumerate() {
        if l != 0.0 {
            h += embed(n, i, sz.as_ref()) * faer::scale(0.5 * l);
        }
    }
    h
}

/// Jordan–Wigner annihilator `a_i = prod_{y<i} (-sigma^3_y) sigma^-_i`.
pub fn jw_annihilator(n_sites: usize, i: usize) -> Mat<f64> {
    let mut op = Mat::<f64>::identity(1, 1);
    let string = sigma_z() * faer::scale(-1.0);
    for y in 0..n_sites {
        let factor = if y < i {
            string.clone()
        } else if y == i {
            sigma_minus()
        } else {
            Mat::identity(2, 2)
        };
        op = kron(op.as_ref(), factor.as_ref());
    }
    op
}

#[derive(Debug, Clone)]
pub struct SpinSystem {
    pub m: usize,
    pub n_center: usize,
    pub h: Mat<f64>,
    pub h_l: Mat<f64>,
    pub h_c: Mat<f64>,
    pub h_r: Mat<f64>,
    pub v_l: Mat<f64>,
    pub v_r: Mat<f64>,
    pub log_omega: Mat<f64>,
    eig_h: SymEig,
    /// Eigenvectors of `log omega`; `s` holds the eigenvalues of `S = -log omega`.
    eig_s: SymEig,
    s: Vec<f64>,
}

pub fn build_spin_system(spec: &ChainSpec, m: usize) -> Result<SpinSystem> {
    let n_sites = 2 * m + 1;
    if n_sites > MAX_SITES {
        return Err(Error::TooManySites(n_sites));
    }
    let n = spec.n();
    let mi = m as i64;
    if mi < n + 1 {
        return Err(Error::Dimension(format!("M = {m} leaves a reservoir empty (need M >= N + 1 = {})", n + 1)));
    }
    let sites: Vec<i64> = (-mi..=mi).collect();
    let restricted = |lo: i64, hi: i64| -> Mat<f64> {
        let fields: Vec<f64> = sites.iter().map(|&x| if (lo..=hi).contains(&x) { spec.v(x) } else { 0.0 }).collect();
        let couplings: Vec<f64> =
            sites[..sites.len() - 1].iter().map(|&x| if lo <= x && x < hi { spec.j(x) } else { 0.0 }).collect();
        spin_hamiltonian(&couplings, &fields)
    };
    let bond = |x: i64| -> Mat<f64> { embed(n_sites, (x + mi) as usize, hopping().as_ref()) * faer::scale(spec.j(x)) };
    let h_l = restricted(-mi, -n - 1);
    let h_c = restricted(-n, n);
    let h_r = restricted(n + 1, mi);
    let v_l = bond(-n - 1);
    let v_r = bond(n);
    let h = &h_l + &h_c + &h_r + &v_l + &v_r;
    let k = &h_l * faer::scale(-spec.beta_l) + &h_r * faer::scale(-spec.beta_r);
    let eig_k = sym_eig(k.as_ref());
    let log_z = log_sum_exp(eig_k.values.iter().copied());
    let dim = 1usize << n_sites;
    let log_omega = Mat::from_fn(dim, dim, |i, j| k.read(i, j) - if i == j { log_z } else { 0.0 });
    let s = eig_k.values.iter().map(|x| log_z - x).collect();
    let eig_h = sym_eig(h.as_ref());
    Ok(SpinSystem { m, n_center: spec.center_halfwidth, h, h_l, h_c, h_r, v_l, v_r, log_omega, eig_h, eig_s: eig_k, s })
}

impl SpinSystem {
    pub fn n_sites(&self) -> usize {
        2 * self.m + 1
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn spectrum(&self) -> Vec<f64> {
        let mut v = self.eig_h.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Eigenvalues of the entropy observable `S = -log omega`.
    pub fn entropy_levels(&self) -> &[f64] {
        &self.s
    }

    pub fn omega(&self) -> Mat<f64> {
        let w: Vec<f64> = self.s.iter().map(|s| (-s).exp()).collect();
        sym_reconstruct(self.eig_s.vectors.as_ref(), &w)
    }

    /// `X -> W^T X W` with `W` the eigenvectors of `H`.
    fn to_energy_basis(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let w = &self.eig_h.vectors;
        w.transpose() * x * w
    }

    /// `e^{-itH} X e^{itH}` for `X` already in the energy basis.
    fn evolve(&self, x: MatRef<'_, f64>, t: f64) -> Mat<c64> {
        let d = &self.eig_h.values;
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
            let (s, c) = (-t * (d[i] - d[j])).sin_cos();
            c64::new(c, s) * x.read(i, j)
        })
    }

    /// `|<v_j, e^{-itH} v_i>|^2` for eigenvectors `v` of `S`.
    fn transition_weights(&self, t: f64) -> Mat<f64> {
        let p = self.eig_s.vectors.transpose() * &self.eig_h.vectors;
        let d = &self.eig_h.values;
        let cos: Vec<f64> = d.iter().map(|e| (t * e).cos()).collect();
        let sin: Vec<f64> = d.iter().map(|e| -(t * e).sin()).collect();
        let n = p.nrows();
        let pc = Mat::from_fn(n, n, |i, j| p.read(i, j) * cos[j]);
        let ps = Mat::from_fn(n, n, |i, j| p.read(i, j) * sin[j]);
        let re = &pc * p.transpose();
        let im = &ps * p.transpose();
        Mat::from_fn(n, n, |i, j| re.read(i, j).powi(2) + im.read(i, j).powi(2))
    }

    /// `log tr(omega_t^{1-alpha} omega^alpha)` with `omega_t = e^{-itH} omega e^{itH}`.
    pub fn renyi(&self, t: f64, alpha: f64) -> f64 {
        let w = self.transition_weights(t);
        let n = self.dim();
        let mut terms = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x = w.read(j, i);
                if x > 0.0 {
                    terms.push(x.ln() - (1.0 - alpha) * self.s[i] - alpha * self.s[j]);
                }
            }
        }
        log_sum_exp(terms)
    }

    /// Energy-basis matrix of `log omega - log omega_{-t}` with `omega_{-t} = e^{itH} omega e^{-itH}`.
    fn entropy_change(&self, t: f64) -> Mat<c64> {
        let l = self.to_energy_basis(self.log_omega.as_ref());
        let back = self.evolve(l.as_ref(), -t);
        let n = self.dim();
        hermitize(Mat::from_fn(n, n, |i, j| c64::new(l.read(i, j), 0.0) - back.read(i, j)).as_ref())
    }

    /// Eigenvalues of the mean entropy production `Sigma^t`.
    pub fn entropy_production_spectrum(&self, t: f64) -> Vec<f64> {
        let mut v: Vec<f64> = herm_eig(self.entropy_change(t).as_ref()).values.into_iter().map(|x| x / t).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `log omega(e^{-alpha t Sigma^t})`.
    pub fn es_oracle(&self, t: f64, alpha: f64) -> f64 {
        let e = herm_eig(self.entropy_change(t).as_ref());
        let om = crate::linalg::to_complex(self.to_energy_basis(self.omega().as_ref()).as_ref());
        let y = &e.vectors;
        let proj = y.adjoint() * &om * y;
        log_sum_exp((0..self.dim()).filter_map(|i| {
            let w = proj.read(i, i).re;
            (w > 0.0).then(|| w.ln() - alpha * e.values[i])
        }))
    }

    /// `S(omega_t | omega) = tr(omega_t (log omega - log omega_t))`.
    pub fn relative_entropy(&self, t: f64) -> f64 {
        let om = self.to_energy_basis(self.omega().as_ref());
        let l = self.to_energy_basis(self.log_omega.as_ref());
        let omt = self.evolve(om.as_ref(), t);
        let n = self.dim();
        let mut cross = 0.0;
        for i in 0..n {
            for j in 0..n {
                cross += (omt.read(i, j) * l.read(j, i)).re;
            }
        }
        let own: f64 = self.s.iter().map(|s| -(-s).exp() * s).sum();
        cross - own
    }

    /// `omega(tau^t(Phi_side))` with `Phi = i [H_side, V_side]`.
    pub fn heat_flux(&self, t: f64, side: Side) -> f64 {
        let (hs, vs) = match side {
            Side::Left => (&self.h_l, &self.v_l),
            Side::Right => (&self.h_r, &self.v_r),
        };
        let c = self.to_energy_basis((hs * vs - vs * hs).as_ref());
        let om = self.to_energy_basis(self.omega().as_ref());
        let omt = self.evolve(om.as_ref(), t);
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (omt.read(i, j) * c64::new(0.0, c.read(j, i))).re;
            }
        }
        acc
    }
}

/// Two-time measurement statistics of `S`: atoms `phi_j` with weights `prob_j`.
#[derive(Debug, Clone)]
pub struct FcsMeasure {
    pub t: f64,
    pub phi: Vec<f64>,
    pub prob: Vec<f64>,
    /// Neighbouring groups of `S` closer than ten grouping tolerances.
    pub grouping_warnings: usize,
}

fn group_levels(levels: &[f64]) -> (Vec<(f64, Vec<usize>)>, usize) {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((_, members)) if levels[i] - levels[*members.last().unwrap()] <= GROUPING_TOL => members.push(i),
            _ => groups.push((levels[i], vec![i])),
        }
    }
    for g in &mut groups {
        g.0 = g.1.iter().map(|&i| levels[i]).sum::<f64>() / g.1.len() as f64;
    }
    let warnings = groups.windows(2).filter(|w| w[1].0 - w[0].0 < 10.0 * GROUPING_TOL).count();
    (groups, warnings)
}

pub fn fcs_measure(sys: &SpinSystem, t: f64) -> Result<FcsMeasure> {
    if t == 0.0 {
        return Err(Error::Validation("measurement time must be nonzero".into()));
    }
    let (groups, grouping_warnings) = group_levels(&sys.s);
    let w = sys.transition_weights(t);
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(groups.len() * groups.len());
    for (s0, from) in &groups {
        let weight = (-s0).exp();
        for (s1, to) in &groups {
            let mut mass = 0.0;
            for &i in from {
                for &j in to {
                    mass += w.read(j, i);
                }
            }
            atoms.push((s1 - s0, weight * mass));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (ds, p) in atoms {
        match merged.last_mut() {
            Some(last) if ds - last.0 <= 10.0 * GROUPING_TOL => last.1 += p,
            _ => merged.push((ds, p)),
        }
    }
    Ok(FcsMeasure {
        t,
        phi: merged.iter().map(|a| a.0 / t).collect(),
        prob: merged.iter().map(|a| a.1).collect(),
        grouping_warnings,
    })
}

/// `log sum_j p_j e^{-alpha t phi_j}`.
pub fn fcs_mgf(measure: &FcsMeasure, t: f64, alpha: f64) -> f64 {
    log_sum_exp(
        measure.phi.iter().zip(&measure.prob).filter(|(_, &p)| p > 0.0).map(|(&phi, &p)| p.ln() - alpha * t * phi),
    )
}

impl FcsMeasure {
    pub fn total(&self) -> f64 {
        self.prob.iter().sum()
    }

    fn find(&self, phi: f64) -> Option<usize> {
        let tol = 10.0 * GROUPING_TOL / self.t.abs();
        let i = self.phi.partition_point(|&x| x < phi - tol);
        (i < self.phi.len() && (self.phi[i] - phi).abs() <= tol).then_some(i)
    }

    /// Largest `|P(-phi) - e^{-t phi} P(phi)|` over atoms; `None` if the support
    /// is not symmetric.
    pub fn fluctuation_residual(&self) -> Option<f64> {
        let mut worst = 0.0f64;
        for (j, &phi) in self.phi.iter().enumerate() {
            let k = self.find(-phi)?;
            worst = worst.max((self.prob[k] - (-self.t * phi).exp() * self.prob[j]).abs());
        }
        Some(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JwReport {
    pub max_deviation: f64,
    pub worst_index: usize,
    pub levels: usize,
}

/// Compares the many-body spectrum with subset sums of one-particle energies,
/// both shifted to start at zero.
pub fn jw_spectrum_check(sys: &SpinSystem, chain: &FiniteChain) -> Result<JwReport> {
    if chain.dim() != sys.n_sites() {
        return Err(Error::Dimension(format!("chain has {} sites, spin system {}", chain.dim(), sys.n_sites())));
    }
    let eps = sym_eig(chain.h.as_ref()).values;
    let mut sums = vec![0.0f64; 1 << eps.len()];
    for (bit, e) in eps.iter().enumerate() {
        let half = 1usize << bit;
        for mask in 0..half {
            sums[mask | half] = sums[mask] + e;
        }
    }
    sums.sort_by(f64::total_cmp);
    let spin = sys.spectrum();
    let (a0, b0) = (spin[0], sums[0]);
    let mut report = JwReport { max_deviation: 0.0, worst_index: 0, levels: sums.len() };
    for (i, (a, b)) in spin.iter().zip(&sums).enumerate() {
        let d = ((a - a0) - (b - b0)).abs();
        if d > report.max_deviation {
            report.max_deviation = d;
            report.worst_index = i;
        }
    }
    Ok(report)
}
