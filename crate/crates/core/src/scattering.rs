//! Boundary Green's functions and the two-channel scattering matrix of an
//! eventually-constant Jacobi matrix.
//!
//! Resolvents are `(h - z)^{-1}`; boundary values are taken at `z = E + i0`.
//! Constant tails are folded into complex self-energies, so every quantity here
//! is an exact finite computation.

use faer::complex_native::c64;
use faer::prelude::SpSolver;
use faer::Mat;
use num_complex::Complex64;

use crate::chain::{ChainSpec, Side, Site};
use crate::error::{Error, Result};

/// Hard exclusion margin around band edges.
pub const EDGE_MARGIN: f64 = 1e-9;

/// Threshold for both reflectionless criteria.
pub const REFLECTIONLESS_TOL: f64 = 1e-8;

/// Weyl function of the constant half-line with hopping `j` and field `v`,
/// i.e. the root of `j^2 m^2 + (z - v) m + 1 = 0` that decays into the tail.
/// On the band the root with `Im m > 0` is taken.
pub fn tail_m(j: f64, v: f64, z: Complex64) -> Complex64 {
    let j2 = j * j;
    let w = z - v;
    let root = (w * w - 4.0 * j2).sqrt();
    let a = (-w + root) / (2.0 * j2);
    let b = (-w - root) / (2.0 * j2);
    let (na, nb) = (a.norm(), b.norm());
    if (na - nb).abs() <= 1e-12 * na.max(nb) {
        if a.im >= b.im {
            a
        } else {
            b
        }
    } else if na < nb {
        a
    } else {
        b
    }
}

/// Continued-fraction evaluator for a half-line Weyl function.
#[derive(Debug, Clone, PartialEq)]
pub struct MBoundary {
    pub side: Side,
    pub tail: Site,
    /// `(v, J)` pairs from the tail inwards, ending at the evaluation site; `J` is
    /// the bond to the previous (outer) site.
    pub sites: Vec<(f64, f64)>,
}

impl MBoundary {
    /// Left-facing: the half-line `(-inf, at_site]`. Right-facing: `[at_site, inf)`.
    pub fn new(spec: &ChainSpec, side: Side, at_site: i64) -> Self {
        let sites = match side {
            Side::Left => (spec.left_edge()..=at_site).map(|y| (spec.v(y), spec.j(y - 1))).collect(),
            Side::Right => (at_site..=spec.right_edge()).rev().map(|y| (spec.v(y), spec.j(y))).collect(),
        };
        Self { side, tail: spec.tail(side), sites }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.sites.iter().fold(tail_m(self.tail.j, self.tail.v, z), |m, &(v, j)| 1.0 / (v - z - j * j * m))
    }
}

pub fn half_line_m(spec: &ChainSpec, side: Side, at_site: i64, e: f64) -> Complex64 {
    MBoundary::new(spec, side, at_site).eval(Complex64::new(e, 0.0))
}

/// `F_l(E)` or `F_r(E)`: imaginary part of the Weyl function of the reservoir half-line.
pub fn reservoir_density(spec: &ChainSpec, side: Side, e: f64) -> f64 {
    let n = spec.n();
    let at = match side {
        Side::Left => -n - 1,
        Side::Right => n + 1,
    };
    half_line_m(spec, side, at, e).im
}

/// Absolutely continuous bands of the two tails and their intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcBand {
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub common: Option<(f64, f64)>,
}

impl AcBand {
    pub fn is_empty(&self) -> bool {
        self.common.is_none()
    }

    pub fn width(&self) -> f64 {
        self.common.map_or(0.0, |(a, b)| b - a)
    }

    pub fn is_interior(&self, e: f64) -> bool {
        self.common.is_some_and(|(a, b)| e > a + EDGE_MARGIN && e < b - EDGE_MARGIN)
    }

    fn near_edge(&self, e: f64) -> bool {
        [self.left.0, self.left.1, self.right.0, self.right.1].iter().any(|x| (e - x).abs() <= EDGE_MARGIN)
    }
}

pub fn ac_band(spec: &ChainSpec) -> AcBand {
    let band = |s: Site| (s.v - 2.0 * s.j.abs(), s.v + 2.0 * s.j.abs());
    let left = band(spec.left_tail);
    let right = band(spec.right_tail);
    let lo = left.0.max(right.0);
    let hi = left.1.min(right.1);
    AcBand { left, right, common: (hi > lo).then_some((lo, hi)) }
}

/// Inverse of the self-energy dressed window matrix on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    lo: i64,
    inv: Mat<c64>,
}

fn to_c64(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

impl Resolvent {
    /// `margin` extra tail sites are kept explicitly on both sides.
    pub fn new(spec: &ChainSpec, z: Complex64, sites: &[i64], margin: usize) -> Result<Self> {
        let n = spec.n();
        let smin = sites.iter().copied().min().unwrap_or(0);
        let smax = sites.iter().copied().max().unwrap_or(0);
        let lo = spec.left_edge().min(-n - 1).min(smin) - 1 - margin as i64;
        let hi = (spec.right_edge() + 1).max(n + 1).max(smax) + 1 + margin as i64;
        let dim = (hi - lo + 1) as usize;
        let mut a = Mat::<c64>::zeros(dim, dim);
        for x in lo..=hi {
            let i = (x - lo) as usize;
            let mut d = Complex64::new(spec.v(x), 0.0) - z;
            if x == lo {
                let t = spec.left_tail;
                d -= t.j * t.j * tail_m(t.j, t.v, z);
            }
            if x == hi {
                let t = spec.right_tail;
                d -= t.j * t.j * tail_m(t.j, t.v, z);
            }
            a.write(i, i, to_c64(d));
            if x < hi {
                let j = c64::new(spec.j(x), 0.0);
                a.write(i, i + 1, j);
                a.write(i + 1, i, j);
            }
        }
        let inv = a.partial_piv_lu().solve(Mat::<c64>::identity(dim, dim));
        for j in 0..dim {
            for i in 0..dim {
                let x = inv.read(i, j);
                if !(x.re.is_finite() && x.im.is_finite()) {
                    return Err(Error::NonAcPoint(z.re));
                }
            }
        }
        Ok(Self { lo, inv })
    }

    pub fn get(&self, a: i64, b: i64) -> Complex64 {
        let x = self.inv.read((a - self.lo) as usize, (b - self.lo) as usize);
        Complex64::new(x.re, x.im)
    }
}

/// `<delta_a, (h - z)^{-1} delta_b>` for any `z` with `Im z >= 0`.
pub fn green_at(spec: &ChainSpec, z: Complex64, a: i64, b: i64) -> Result<Complex64> {
    Ok(Resolvent::new(spec, z, &[a, b], 0)?.get(a, b))
}

/// `<delta_a, (h - E - i0)^{-1} delta_b>`.
pub fn full_green(spec: &ChainSpec, e: f64, a: i64, b: i64) -> Result<Complex64> {
    if ac_band(spec).near_edge(e) {
        return Err(Error::BandEdge(e));
    }
    green_at(spec, Complex64::new(e, 0.0), a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix {
    pub e: f64,
    /// `[[s_ll, s_lr], [s_rl, s_rr]]`.
    pub s: [[Complex64; 2]; 2],
}

impl SMatrix {
    pub fn s_ll(&self) -> Complex64 {
        self.s[0][0]
    }

    pub fn s_lr(&self) -> Complex64 {
        self.s[0][1]
    }

    pub fn s_rl(&self) -> Complex64 {
        self.s[1][0]
    }

    pub fn s_rr(&self) -> Complex64 {
        self.s[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let s = self.s;
        Self { e: self.e, s: [[s[0][0].conj(), s[1][0].conj()], [s[0][1].conj(), s[1][1].conj()]] }
    }

    /// `max |(s s^*)_{ij} - delta_ij|`.
    pub fn unitarity_residual(&self) -> f64 {
        let s = self.s;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let x = s[i][0] * s[j][0].conj() + s[i][1] * s[j][1].conj();
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - id).norm());
            }
        }
        worst
    }

    pub fn symmetry_residual(&self) -> f64 {
        (self.s_lr() - self.s_rl()).norm()
    }
}

/// Green's function entries and reservoir data at one energy.
#[derive(Debug, Clone, Copy)]
struct Channels {
    h_ll: Complex64,
    h_lr: Complex64,
    h_rl: Complex64,
    h_rr: Complex64,
    g_out_l: Complex64,
    g_out_r: Complex64,
    f_l: f64,
    f_r: f64,
}

fn channels(spec: &ChainSpec, e: f64) -> Result<Channels> {
    let band = ac_band(spec);
    if band.is_empty() {
        return Err(Error::EmptyBand);
    }
    if !band.is_interior(e) {
        return Err(Error::OutsideBand(e));
    }
    let n = spec.n();
    let (cl, cr) = (-n, n);
    let r = Resolvent::new(spec, Complex64::new(e, 0.0), &[cl - 1, cr + 1], 0)?;
    Ok(Channels {
        h_ll: r.get(cl, cl),
        h_lr: r.get(cl, cr),
        h_rl: r.get(cr, cl),
        h_rr: r.get(cr, cr),
        g_out_l: r.get(cl - 1, cl),
        g_out_r: r.get(cr + 1, cr),
        f_l: reservoir_density(spec, Side::Left, e),
        f_r: reservoir_density(spec, Side::Right, e),
    })
}

pub fn scattering_matrix(spec: &ChainSpec, e: f64) -> Result<SMatrix> {
    let c = channels(spec, e)?;
    let (jl, jr) = (spec.j_l(), spec.j_r());
    let i2 = Complex64::new(0.0, 2.0);
    let cross = i2 * jl * jr * (c.f_l * c.f_r).sqrt();
    Ok(SMatrix {
        e,
        s: [
            [1.0 + i2 * jl * jl * c.h_ll * c.f_l, cross * c.h_lr],
            [cross * c.h_rl, 1.0 + i2 * jr * jr * c.h_rr * c.f_r],
        ],
    })
}

/// Largest deviation in the two boundary identities
/// `J_r^2 |H_lr|^2 F_r = Im[(J_l g(-N-1, -N) - 1) conj(H_ll)]` and its mirror image.
pub fn funnyform_residual(spec: &ChainSpec, e: f64) -> Result<f64> {
    let c = channels(spec, e)?;
    let (jl, jr) = (spec.j_l(), spec.j_r());
    let left = jr * jr * c.h_lr.norm_sqr() * c.f_r - ((jl * c.g_out_l - 1.0) * c.h_ll.conj()).im;
    let right = jl * jl * c.h_rl.norm_sqr() * c.f_l - ((jr * c.g_out_r - 1.0) * c.h_rr.conj()).im;
    Ok(left.abs().max(right.abs()))
}

/// `|J_N^2 m_N^+ conj(m_{N+1}^-) - 1|` with `m^+` the Weyl function of
/// `[N+1, inf)` and `m^-` that of `(-inf, N]`.
pub fn m_residual(spec: &ChainSpec, e: f64) -> f64 {
    let n = spec.n();
    let jn = spec.j(n);
    let plus = half_line_m(spec, Side::Right, n + 1, e);
    let minus = half_line_m(spec, Side::Left, n, e);
    (jn * jn * plus * minus.conj() - 1.0).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionReport {
    pub is_reflectionless: bool,
    pub max_diag: f64,
    pub max_m_residual: f64,
    /// Both criteria give the same verdict at every grid point.
    pub criteria_agree: bool,
}

pub fn reflectionless_test(spec: &ChainSpec, grid: &[f64]) -> Result<ReflectionReport> {
    if ac_band(spec).is_empty() {
        return Err(Error::EmptyBand);
    }
    let mut report =
        ReflectionReport { is_reflectionless: true, max_diag: 0.0, max_m_residual: 0.0, criteria_agree: true };
    for &e in grid {
        let s = scattering_matrix(spec, e)?;
        let diag = s.s_ll().norm().max(s.s_rr().norm());
        let res = m_residual(spec, e);
        report.max_diag = report.max_diag.max(diag);
        report.max_m_residual = report.max_m_residual.max(res);
        if (diag < REFLECTIONLESS_TOL) != (res < REFLECTIONLESS_TOL) {
            report.criteria_agree = false;
        }
    }
    report.is_reflectionless = report.max_diag < REFLECTIONLESS_TOL && report.max_m_residual < REFLECTIONLESS_TOL;
    Ok(report)
}

/// Number of negative eigenvalues of the real dressed matrix `h_eff(E) - E`,
/// valid for `E` outside both tail bands. It is nondecreasing in `E` and jumps
/// exactly at eigenvalues of `h`.
fn negative_count(spec: &ChainSpec, e: f64) -> usize {
    let n = spec.n();
    let lo = spec.left_edge().min(-n - 1) - 1;
    let hi = (spec.right_edge() + 1).max(n + 1) + 1;
    let z = Complex64::new(e, 0.0);
    let mut count = 0;
    let mut prev = f64::INFINITY;
    for x in lo..=hi {
        let mut d = spec.v(x) - e;
        if x == lo {
            let t = spec.left_tail;
            d -= t.j * t.j * tail_m(t.j, t.v, z).re;
        }
        if x == hi {
            let t = spec.right_tail;
            d -= t.j * t.j * tail_m(t.j, t.v, z).re;
        }
        if x > lo {
            let j = spec.j(x - 1);
            d -= j * j / prev;
        }
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
        prev = d;
    }
    count
}

const BOUND_STATE_TOL: f64 = 1e-10;

fn isolate(spec: &ChainSpec, lo: f64, hi: f64, clo: usize, chi: usize, out: &mut Vec<f64>) {
    if chi <= clo {
        return;
    }
    if hi - lo <= BOUND_STATE_TOL {
        out.extend(std::iter::repeat_n(0.5 * (lo + hi), chi - clo));
        return;
    }
    let mid = 0.5 * (lo + hi);
    let cm = negative_count(spec, mid);
    isolate(spec, lo, mid, clo, cm, out);
    isolate(spec, mid, hi, cm, chi, out);
}

/// Eigenvalues of `h` outside both tail bands, refined by bisection.
pub fn detect_bound_states(spec: &ChainSpec) -> Vec<f64> {
    let (jmax, vmin, vmax) = spec.bounds();
    let lower = vmin - 2.0 * jmax - 1.0;
    let upper = vmax + 2.0 * jmax + 1.0;
    let band = ac_band(spec);
    let mut covered = [band.left, band.right];
    covered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut cursor = lower;
    for (a, b) in covered {
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    gaps.push((cursor, upper));
    let mut out = Vec::new();
    for (a, b) in gaps {
        let (a, b) = (a + EDGE_MARGIN, b - EDGE_MARGIN);
        if b <= a {
            continue;
        }
        let (ca, cb) = (negative_count(spec, a), negative_count(spec, b));
        isolate(spec, a, b, ca, cb, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tail_m_values() {
        assert!((tail_m(1.0, 0.0, c(0.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
        let above = tail_m(1.0, 0.0, c(3.0, 0.0));
        assert!((above.re + (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15 && above.im == 0.0);
        let below = tail_m(1.0, 0.0, c(-3.0, 0.0));
        assert!((below.re - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        for k in 0..200 {
            let e = -5.0 + 0.05 * k as f64;
            assert!(tail_m(1.3, 0.2, c(e, 0.0)).im >= -1e-12);
        }
    }

    #[test]
    fn tail_m_solves_its_quadratic_off_axis() {
        for z in [c(0.3, 0.1), c(-2.5, 0.01), c(4.0, 2.0)] {
            let (j, v) = (0.8, -0.3);
            let m = tail_m(j, v, z);
            assert!((j * j * m * m + (z - v) * m + 1.0).norm() < 1e-13);
            assert!(m.im > 0.0);
            assert!(m.norm() < 1.0 / j);
        }
    }

    #[test]
    fn empty_window_reduces_to_tail() {
        let s = ChainSpec::free(1.0, 2.0);
        for e in [-1.5, 0.0, 0.7] {
            let m = half_line_m(&s, Side::Left, -1, e);
            assert_eq!(m, tail_m(1.0, 0.0, c(e, 0.0)));
        }
    }

    #[test]
    fn density_positive_in_band() {
        let s = ChainSpec::free(1.0, 2.0).with_site(-1, 0.6, 0.3);
        for k in 1..40 {
            let e = -2.0 + 0.1 * k as f64;
            assert!(reservoir_density(&s, Side::Left, e) > 0.0);
        }
    }

    #[test]
    fn half_line_matches_dressed_matrix() {
        let s = ChainSpec::free(1.0, 1.0).with_center(1).with_site(-3, 0.7, 0.4).with_site(-2, 1.1, -0.2);
        let z = c(0.4, 0.0);
        let m = half_line_m(&s, Side::Left, -2, 0.4);
        // (-inf, -2] as a dense 3x3 block on [-4, -2] with self-energy at -4.
        let t = s.left_tail;
        let sites = [-4i64, -3, -2];
        let mut a = Mat::<c64>::zeros(3, 3);
        for (i, &x) in sites.iter().enumerate() {
            let mut d = c(s.v(x), 0.0) - z;
            if i == 0 {
                d -= t.j * t.j * tail_m(t.j, t.v, z);
            }
            a.write(i, i, to_c64(d));
            if i < 2 {
                a.write(i, i + 1, c64::new(s.j(x), 0.0));
                a.write(i + 1, i, c64::new(s.j(x), 0.0));
            }
        }
        let inv = a.partial_piv_lu().solve(Mat::<c64>::identity(3, 3));
        let g = inv.read(2, 2);
        assert!((c(g.re, g.im) - m).norm() < 1e-12);
    }

    #[test]
    fn free_green_is_imaginary_at_zero() {
        let s = ChainSpec::free(1.0, 2.0);
        let g = full_green(&s, 0.0, 0, 0).unwrap();
        assert!(g.re.abs() < 1e-14);
        assert!((g.im - 0.5).abs() < 1e-14);
        assert!(matches!(full_green(&s, 2.0, 0, 0), Err(Error::BandEdge(_))));
    }

    #[test]
    fn enlarging_enclosure_changes_nothing() {
        let s = ChainSpec::free(1.0, 2.0).with_center(2).with_site(0, 0.5, 0.0).with_site(1, 1.0, 0.3);
        let z = c(0.55, 0.0);
        let a = Resolvent::new(&s, z, &[-2, 2], 0).unwrap();
        let b = Resolvent::new(&s, z, &[-2, 2], 10).unwrap();
        for x in -3..=3 {
            for y in -3..=3 {
                assert!((a.get(x, y) - b.get(x, y)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_chain_is_reflectionless() {
        let s = ChainSpec::free(1.0, 2.0);
        let grid: Vec<f64> = (1..40).map(|k| -2.0 + 0.1 * k as f64).collect();
        let r = reflectionless_test(&s, &grid).unwrap();
        assert!(r.is_reflectionless && r.criteria_agree, "{r:?}");
        assert!(r.max_diag <= 1e-10);
    }

    #[test]
    fn defect_chain_reflects() {
        let s = ChainSpec::free(1.0, 2.0).with_center(2).with_site(0, 0.5, 0.0);
        let grid: Vec<f64> = (1..40).map(|k| -2.0 + 0.1 * k as f64).collect();
        let r = reflectionless_test(&s, &grid).unwrap();
        assert!(!r.is_reflectionless && r.criteria_agree);
        assert!(r.max_diag > 1e-3);
        let sm = scattering_matrix(&s, 0.5).unwrap();
        assert!(sm.s_ll().norm() > 0.01);
        assert!(sm.unitarity_residual() < 1e-10 && sm.symmetry_residual() < 1e-10);
    }

    #[test]
    fn scattering_outside_band_errors() {
        let s = ChainSpec::free(1.0, 2.0).with_tails(Site::new(1.0, 0.0), Site::new(1.0, 5.0));
        assert!(matches!(scattering_matrix(&s, 0.0), Err(Error::EmptyBand)));
        let s = ChainSpec::free(1.0, 2.0);
        assert!(matches!(scattering_matrix(&s, 2.5), Err(Error::OutsideBand(_))));
    }

    #[test]
    fn bound_states() {
        assert!(detect_bound_states(&ChainSpec::free(1.0, 1.0)).is_empty());
        let strong = ChainSpec::free(1.0, 1.0).with_site(0, 1.0, 5.0);
        let b = detect_bound_states(&strong);
        assert_eq!(b.len(), 1);
        assert!((b[0] - 29f64.sqrt()).abs() < 1e-9);
        let weak = ChainSpec::free(1.0, 1.0).with_site(0, 0.9, 0.0);
        assert!(detect_bound_states(&weak).is_empty());
        let strong_bond = ChainSpec::free(1.0, 1.0).with_site(0, 2.0, 0.0);
        assert_eq!(detect_bound_states(&strong_bond).len(), 2);
    }

    #[test]
    fn band_bookkeeping() {
        let s = ChainSpec::free(1.0, 2.0).with_tails(Site::new(1.0, 0.0), Site::new(0.5, 1.0));
        let b = ac_band(&s);
        assert_eq!(b.common, Some((0.0, 2.0)));
        assert!(b.is_interior(1.0) && !b.is_interior(-0.5));
    }
}
