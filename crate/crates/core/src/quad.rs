//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

pub const MAX_SUBDIVISIONS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Piece { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// `int_a^b f` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
    }
    let mut pieces = vec![kronrod(&f, a, b)];
    loop {
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= tol {
            break;
        }
        if pieces.len() >= MAX_SUBDIVISIONS {
            return Err(Error::NoConvergence(format!(
                "quadrature error {error:e} above {tol:e} after {MAX_SUBDIVISIONS} subdivisions"
            )));
        }
        let (worst, _) = pieces.iter().enumerate().max_by(|x, y| x.1.error.total_cmp(&y.1.error)).unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(kronrod(&f, p.a, mid));
        pieces.push(kronrod(&f, mid, p.b));
    }
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Quadrature {
        value: pieces.iter().map(|p| p.value).sum(),
        error: pieces.iter().map(|p| p.error).sum(),
        intervals: pieces.len(),
    })
}

/// `int_lo^hi f` through `E = c + w sin(theta)`, never sampling the endpoints.
pub fn integrate_band(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Quadrature> {
    let c = 0.5 * (lo + hi);
    let w = 0.5 * (hi - lo);
    let half_pi = std::f64::consts::FRAC_PI_2;
    integrate(
        |th| {
            let (s, co) = th.sin_cos();
            f(c + w * s) * w * co
        },
        -half_pi,
        half_pi,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-12).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn band_substitution_handles_sqrt_edges() {
        let q = integrate_band(|e| (4.0 - e * e).sqrt(), -2.0, 2.0, 1e-12).unwrap();
        assert!((q.value - 2.0 * std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_converges() {
        let q = integrate(|x| (20.0 * x).cos(), 0.0, 3.0, 1e-10).unwrap();
        assert!((q.value - (60.0f64).sin() / 20.0).abs() < 1e-10);
    }

    #[test]
    fn impossible_tolerance_fails() {
        assert!(integrate(|x| if x > 0.123 { 1.0 } else { 0.0 }, 0.0, 1.0, 0.0).is_err());
    }
}
