//! Dense Hermitian functional calculus on top of `faer`.

use faer::complex_native::c64;
use faer::{Mat, MatRef, Side as Triangle};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

/// Relative Hermiticity tolerance accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn {
    Exp,
    Power(f64),
    Log,
}

impl ScalarFn {
    fn apply(self, x: f64) -> f64 {
        match self {
            ScalarFn::Exp => x.exp(),
            ScalarFn::Power(r) => x.powf(r),
            ScalarFn::Log => x.ln(),
        }
    }
}

/// Real symmetric eigendecomposition `A = V diag(values) V^T`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn sym_eig(a: MatRef<'_, f64>) -> SymEig {
    let e = a.selfadjoint_eigendecomposition(Triangle::Lower);
    let values = (0..a.nrows()).map(|i| e.s().column_vector().read(i)).collect();
    SymEig { values, vectors: e.u().to_owned() }
}

/// Complex Hermitian eigendecomposition `A = V diag(values) V^*`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEig {
    /// `V diag(f(values)) V^*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors.read(i, j) * c64::new(fv[j], 0.0));
        &scaled * self.vectors.adjoint()
    }
}

pub fn herm_eig(a: MatRef<'_, c64>) -> HermEig {
    let e = a.selfadjoint_eigendecomposition(Triangle::Lower);
    let values = (0..a.nrows()).map(|i| e.s().column_vector().read(i).re).collect();
    HermEig { values, vectors: e.u().to_owned() }
}

/// The real form `[[Re a, -Im a], [Im a, Re a]]`. It is an algebra homomorphism taking
/// adjoints to transposes, and it doubles every eigenvalue and singular value; faer's real
/// kernels on it are far faster than the complex ones.
pub fn realify(a: MatRef<'_, c64>) -> Mat<f64> {
    let (r, c) = (a.nrows(), a.ncols());
    Mat::from_fn(2 * r, 2 * c, |i, j| {
        let x = a.read(i % r, j % c);
        match (i < r, j < c) {
            (true, true) | (false, false) => x.re,
            (true, false) => -x.im,
            (false, true) => x.im,
        }
    })
}

/// Undoes [`realify`] by reading the left column of blocks.
fn complexify(a: MatRef<'_, f64>) -> CMat {
    let n = a.nrows() / 2;
    Mat::from_fn(n, a.ncols() / 2, |i, j| c64::new(a.read(i, j), a.read(i + n, j)))
}

/// Collapses the doubled spectrum of a realified matrix by averaging adjacent pairs.
fn halve(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Eigenvalues in ascending order.
pub fn herm_eigenvalues(a: MatRef<'_, c64>) -> Vec<f64> {
    halve(realify(a).selfadjoint_eigenvalues(Triangle::Lower))
}

/// Singular values in ascending order.
pub fn singular_values(a: MatRef<'_, c64>) -> Vec<f64> {
    halve(realify(a).singular_values())
}

/// `f(a)` for Hermitian `a`, computed on the real form.
pub fn herm_map(a: MatRef<'_, c64>, f: impl Fn(f64) -> f64) -> CMat {
    let e = sym_eig(realify(a).as_ref());
    let fv: Vec<f64> = e.values.iter().map(|&x| f(x)).collect();
    complexify(sym_reconstruct(e.vectors.as_ref(), &fv).as_ref())
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a.read(i, j), 0.0))
}

/// `(A + A^*) / 2`.
pub fn hermitize(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let x = a.read(i, j);
        let y = a.read(j, i);
        c64::new(0.5 * (x.re + y.re), 0.5 * (x.im - y.im))
    })
}

pub fn max_abs_c(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a.read(i, j).abs());
        }
    }
    m
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a.read(i, j).abs());
        }
    }
    m
}

/// `V diag(d) V^T` for real `V`.
pub fn sym_reconstruct(vectors: MatRef<'_, f64>, d: &[f64]) -> Mat<f64> {
    let n = d.len();
    let scaled = Mat::from_fn(vectors.nrows(), n, |i, j| vectors.read(i, j) * d[j]);
    &scaled * vectors.transpose()
}

/// `log(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `log sum_i e^{x_i}`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Eigenvalue floor applied before fractional powers.
pub const POWER_FLOOR: f64 = 1e-300;

/// `log det(1 + (C C^*)^q)` from the singular values of `C`, plus the number of
/// squared singular values that had to be floored at [`POWER_FLOOR`].
pub fn log_det_one_plus_gram_power(c: MatRef<'_, c64>, q: f64) -> (f64, usize) {
    let mut floored = 0;
    let total = singular_values(c)
        .into_iter()
        .map(|s| {
            let mut lam = s * s;
            if lam < POWER_FLOOR {
                lam = POWER_FLOOR;
                floored += 1;
            }
            log1p_exp(q * lam.ln())
        })
        .sum();
    (total, floored)
}

/// A complex matrix checked to be Hermitian on construction.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    inner: CMat,
}

impl HermitianMatrix {
    pub fn new(a: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
        }
        let scale = max_abs_c(a.as_ref()).max(f64::MIN_POSITIVE);
        let dev = max_abs_c((&a - a.adjoint().to_owned()).as_ref());
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::Dimension(format!("not Hermitian: deviation {dev:e}")));
        }
        Ok(Self { inner: hermitize(a.as_ref()) })
    }

    pub fn from_real(a: MatRef<'_, f64>) -> Result<Self> {
        Self::new(to_complex(a))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.inner.as_ref()
    }

    pub fn into_mat(self) -> CMat {
        self.inner
    }

    pub fn eig(&self) -> HermEig {
        herm_eig(self.inner.as_ref())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigenvalues(self.inner.as_ref())
    }
}

/// Applies `f` through the eigendecomposition of `a`.
pub fn herm_fn(a: &HermitianMatrix, f: ScalarFn) -> Result<HermitianMatrix> {
    let e = a.eig();
    if !matches!(f, ScalarFn::Exp) {
        let min = e.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::NotPositive(min));
        }
    }
    let out = e.map(|x| f.apply(x));
    Ok(HermitianMatrix { inner: hermitize(out.as_ref()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_positive(n: usize, seed: u64) -> HermitianMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut g = &b * b.adjoint();
        for i in 0..n {
            g.write(i, i, g.read(i, i) + c64::new(0.5, 0.0));
        }
        HermitianMatrix::new(hermitize(g.as_ref())).unwrap()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = HermitianMatrix::new(Mat::zeros(4, 4)).unwrap();
        let e = herm_fn(&z, ScalarFn::Exp).unwrap();
        let id: CMat = Mat::identity(4, 4);
        assert!(max_abs_c((e.as_mat() - id.as_ref()).as_ref()) < 1e-15);
    }

    #[test]
    fn power_one_is_identity_map() {
        let a = random_positive(4, 1);
        let b = herm_fn(&a, ScalarFn::Power(1.0)).unwrap();
        assert!(max_abs_c((a.as_mat() - b.as_mat()).as_ref()) < 1e-12);
    }

    #[test]
    fn square_root_squares_back() {
        let a = random_positive(4, 2);
        let r = herm_fn(&a, ScalarFn::Power(0.5)).unwrap();
        let sq = r.as_mat() * r.as_mat();
        assert!(max_abs_c((sq - a.as_mat()).as_ref()) < 1e-10);
    }

    #[test]
    fn log_inverts_exp() {
        let a = random_positive(5, 3);
        let l = herm_fn(&a, ScalarFn::Log).unwrap();
        let back = herm_fn(&l, ScalarFn::Exp).unwrap();
        assert!(max_abs_c((back.as_mat() - a.as_mat()).as_ref()) < 1e-10);
    }

    #[test]
    fn log_rejects_indefinite() {
        let mut d = Mat::<f64>::zeros(2, 2);
        d.write(0, 0, 1.0);
        d.write(1, 1, -1.0);
        let a = HermitianMatrix::from_real(d.as_ref()).unwrap();
        assert!(matches!(herm_fn(&a, ScalarFn::Log), Err(Error::NotPositive(_))));
        assert!(matches!(herm_fn(&a, ScalarFn::Power(0.5)), Err(Error::NotPositive(_))));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut a = Mat::<c64>::zeros(2, 2);
        a.write(0, 1, c64::new(1.0, 0.0));
        assert!(HermitianMatrix::new(a).is_err());
    }

    #[test]
    fn gram_power_matches_eigenvalues() {
        let a = random_positive(6, 4);
        let c = herm_fn(&a, ScalarFn::Power(0.5)).unwrap();
        let (got, floored) = log_det_one_plus_gram_power(c.as_mat(), 0.75);
        let want: f64 = a.eigenvalues().iter().map(|l| (1.0 + l.powf(0.75)).ln()).sum();
        assert_eq!(floored, 0);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn log1p_exp_is_stable() {
        assert_eq!(log1p_exp(800.0), 800.0);
        assert!((log1p_exp(0.0) - 2f64.ln()).abs() < 1e-16);
        assert!(log1p_exp(-800.0) == 0.0);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn real_form_matches_complex_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = Mat::from_fn(9, 9, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut sv = a.singular_values();
        sv.sort_by(f64::total_cmp);
        for (x, y) in singular_values(a.as_ref()).iter().zip(&sv) {
            assert!((x - y).abs() < 1e-12);
        }
        let h = hermitize(a.as_ref());
        let mut ev = h.selfadjoint_eigenvalues(Triangle::Lower);
        ev.sort_by(f64::total_cmp);
        for (x, y) in herm_eigenvalues(h.as_ref()).iter().zip(&ev) {
            assert!((x - y).abs() < 1e-12);
        }
        let direct = herm_eig(h.as_ref()).map(|x| (0.3 * x).exp());
        assert!(max_abs_c((herm_map(h.as_ref(), |x| (0.3 * x).exp()) - direct).as_ref()) < 1e-12);
    }
}
