//! Cross-checks between independent implementations.

use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xyent::linalg::sym_eig;
use xyent::scattering::{funnyform_residual, green_at, m_residual, reservoir_density};
use xyent::spin::jw_annihilator;
use xyent::*;

fn random_spec(seed: u64) -> ChainSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = ChainSpec::free(rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)).with_tails(
        Site::new(rng.gen_range(0.7..1.3), rng.gen_range(-0.3..0.3)),
        Site::new(rng.gen_range(0.7..1.3), rng.gen_range(-0.3..0.3)),
    );
    for x in -1..=1 {
        spec = spec.with_site(x, rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    }
    spec
}

#[test]
fn spin_and_fermion_functionals_agree() {
    let spec = random_spec(11);
    let chain = build_finite_chain(&spec, 2).unwrap();
    let sys = build_spin_system(&spec, 2).unwrap();
    let dyn_ = Dynamics::new(&chain);
    for t in [0.7, 1.9] {
        let mu = fcs_measure(&sys, t).unwrap();
        for alpha in [-0.6, 0.2, 0.55, 1.3] {
            let f = dyn_.functional(FunctionalKind::Pressure(2.0), t, alpha).unwrap().value;
            assert!((fcs_mgf(&mu, t, alpha) - f).abs() < 1e-8);
            let es = dyn_.functional(FunctionalKind::Es, t, alpha).unwrap().value;
            assert!((sys.es_oracle(t, alpha) - es).abs() < 1e-8);
        }
        let rel = sys.relative_entropy(t);
        assert!((rel + t * dyn_.mean_entropy_production(t)).abs() < 1e-8);
        for side in [Side::Left, Side::Right] {
            assert!((sys.heat_flux(t, side) - dyn_.heat_flux(t, side)).abs() < 1e-10);
        }
    }
}

#[test]
fn eleven_site_renyi_trace_matches_pressure_two() {
    let spec = ChainSpec::free(1.0, 2.0);
    let chain = build_finite_chain(&spec, 5).unwrap();
    let sys = build_spin_system(&spec, 5).unwrap();
    let want = sys.renyi(1.5, 0.37);
    let got = entropic_functional(&chain, FunctionalKind::Pressure(2.0), 1.5, 0.37).unwrap();
    assert!((want - got).abs() < 1e-8, "{want} {got}");
}

#[test]
fn gc_reduces_to_es_without_preparation() {
    let chain = build_finite_chain(&random_spec(3), 12).unwrap();
    let d = Dynamics::new(&chain);
    for alpha in [0.3, 0.9] {
        let es = d.functional(FunctionalKind::Es, 1.2, alpha).unwrap().value;
        let gc = d.functional(FunctionalKind::Gc(0.0), 1.2, alpha).unwrap().value;
        assert!((es - gc).abs() < 1e-10);
    }
}

fn det(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    (0..n)
        .map(|c| {
            let minor = Mat::from_fn(n - 1, n - 1, |i, j| a.read(i + 1, if j < c { j } else { j + 1 }));
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * a.read(0, c) * det(&minor)
        })
        .sum()
}

#[test]
fn fock_trace_is_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = Mat::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    // Gamma(A) acts on the span of e_S by the principal minor A_{S,S}.
    let mut trace = 0.0;
    for mask in 0u32..8 {
        let idx: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let sub = Mat::from_fn(idx.len(), idx.len(), |i, j| a.read(idx[i], idx[j]));
        trace += det(&sub);
    }
    let one_plus = Mat::from_fn(3, 3, |i, j| a.read(i, j) + if i == j { 1.0 } else { 0.0 });
    assert!((trace - det(&one_plus)).abs() < 1e-12);

    // Through second quantization: tr e^{dGamma(X)} = det(1 + e^X).
    let x = Mat::from_fn(3, 3, |i, j| 0.3 * ((i + j) as f64).cos() + if i == j { 0.2 * i as f64 } else { 0.0 });
    let ops: Vec<Mat<f64>> = (0..3).map(|i| jw_annihilator(3, i)).collect();
    let mut dg = Mat::<f64>::zeros(8, 8);
    for i in 0..3 {
        for j in 0..3 {
            dg += ops[i].transpose() * &ops[j] * faer::scale(x.read(i, j));
        }
    }
    let lhs: f64 = sym_eig(dg.as_ref()).values.iter().map(|v| v.exp()).sum();
    let rhs: f64 = sym_eig(x.as_ref()).values.iter().map(|v| 1.0 + v.exp()).product();
    assert!((lhs - rhs).abs() < 1e-12 * rhs);
}

#[test]
fn two_point_function_is_fermi_density() {
    let spec = random_spec(8);
    let sys = build_spin_system(&spec, 2).unwrap();
    let chain = build_finite_chain(&spec, 2).unwrap();
    let ek = sym_eig(chain.k.as_ref());
    let fermi: Vec<f64> = ek.values.iter().map(|k| 1.0 / (1.0 + (-k).exp())).collect();
    let t = xyent::linalg::sym_reconstruct(ek.vectors.as_ref(), &fermi);
    let omega = sys.omega();
    let n = sys.n_sites();
    let ops: Vec<Mat<f64>> = (0..n).map(|i| jw_annihilator(n, i)).collect();
    for x in 0..n {
        for y in 0..n {
            let obs = ops[x].transpose() * &ops[y];
            let value: f64 = (0..sys.dim()).map(|i| (&omega * &obs).read(i, i)).sum();
            assert!((value - t.read(y, x)).abs() < 1e-12);
        }
    }
}

/// `(h_M - z)^{-1}` column at site `b` by Thomas elimination on `[-m, m]`.
fn box_green(spec: &ChainSpec, m: i64, z: Complex64, a: i64, b: i64) -> Complex64 {
    let n = (2 * m + 1) as usize;
    let diag: Vec<Complex64> = (-m..=m).map(|x| spec.v(x) - z).collect();
    let off: Vec<f64> = (-m..m).map(|x| spec.j(x)).collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[(b + m) as usize] = Complex64::new(1.0, 0.0);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = off[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x[(a + m) as usize]
}

#[test]
fn embedded_resolvent_matches_large_box() {
    let spec = ChainSpec::free(1.0, 2.0)
        .with_center(1)
        .with_tails(Site::new(1.0, 0.1), Site::new(0.8, -0.2))
        .with_site(-1, 0.6, 0.4)
        .with_site(1, 1.2, -0.3);
    for (e, eps) in [(0.3, 0.05), (-1.1, 0.08), (2.6, 0.05)] {
        let z = Complex64::new(e, eps);
        for (a, b) in [(-1, -1), (-1, 1), (0, 2), (2, 2)] {
            let exact = green_at(&spec, z, a, b).unwrap();
            let brute = box_green(&spec, 2000, z, a, b);
            assert!((exact - brute).norm() < 1e-10, "{e} {a} {b}: {exact} {brute}");
        }
    }
}

#[test]
fn weyl_functions_satisfy_diagonal_green_identity() {
    let spec = random_spec(21);
    let n = spec.n();
    for e in [-0.9, 0.1, 1.0] {
        let g = full_green(&spec, e, n, n).unwrap();
        let plus = half_line_m(&spec, Side::Right, n + 1, e);
        let minus = half_line_m(&spec, Side::Left, n, e);
        let jn = spec.j(n);
        let want = -1.0 / (jn * jn * plus - 1.0 / minus);
        assert!((g - want).norm() < 1e-12);
    }
}

/// `|r|^2` for a free chain with bond `(0, 1)` set to `g`, from the plane-wave
/// matching conditions at sites 0 and 1.
fn transfer_reflection(g: f64, e: f64) -> f64 {
    let k = (e / 2.0).acos();
    let w = |n: f64| Complex64::new(0.0, k * n).exp();
    // u_n = w(n) + r w(-n) for n <= 0, tau w(n) for n >= 1.
    // site 0: u_{-1} + g u_1 = E u_0 ; site 1: g u_0 + u_2 = E u_1
    let a11 = w(1.0) - e;
    let a12 = g * w(1.0);
    let b1 = e - w(-1.0);
    let a21 = Complex64::new(g, 0.0);
    let a22 = w(2.0) - e * w(1.0);
    let b2 = Complex64::new(-g, 0.0);
    let d = a11 * a22 - a12 * a21;
    let r = (b1 * a22 - a12 * b2) / d;
    r.norm_sqr()
}

#[test]
fn bond_defect_reflection_matches_transfer_matrix() {
    let g = 0.5;
    let spec = ChainSpec::free(1.0, 2.0).with_center(2).with_site(0, g, 0.0);
    for i in 1..200 {
        let e = -2.0 + 4.0 * i as f64 / 200.0;
        let s = scattering_matrix(&spec, e).unwrap();
        let tm = transfer_reflection(g, e);
        let k = (e / 2.0).acos();
        let closed = (1.0 - g * g).powi(2) / (1.0 + g.powi(4) - 2.0 * g * g * (2.0 * k).cos());
        assert!((tm - closed).abs() < 1e-12);
        assert!((s.s_ll().norm_sqr() - tm).abs() < 1e-10, "{e}");
        assert!((s.s_rr().norm_sqr() - tm).abs() < 1e-10);
    }
}

#[test]
fn scattering_does_not_depend_on_center_width() {
    let base = ChainSpec::free(1.0, 2.0).with_site(0, 0.7, 0.2).with_site(1, 1.1, -0.1);
    let a = base.clone().with_center(1);
    let b = base.with_center(2);
    for e in [-1.5, -0.2, 0.9] {
        let da = scattering_matrix(&a, e).unwrap().s_ll().norm();
        let db = scattering_matrix(&b, e).unwrap().s_ll().norm();
        assert!((da - db).abs() < 1e-9);
    }
}

#[test]
fn bound_states_agree_with_dense_spectrum() {
    let m = 400usize;
    for (spec, expected) in [
        (ChainSpec::free(1.0, 1.0).with_site(0, 1.0, 5.0), vec![29f64.sqrt()]),
        (ChainSpec::free(1.0, 1.0).with_site(0, 0.9, 0.0), vec![]),
    ] {
        let found = detect_bound_states(&spec);
        let chain = build_finite_chain(&spec, m).unwrap();
        let outside: Vec<f64> = sym_eig(chain.h.as_ref()).values.into_iter().filter(|e| e.abs() > 2.0 + 1e-6).collect();
        assert_eq!(found.len(), expected.len());
        assert_eq!(outside.len(), expected.len());
        for ((f, o), x) in found.iter().zip(&outside).zip(&expected) {
            assert!((f - x).abs() < 1e-9 && (o - x).abs() < 1e-9);
        }
    }
}

#[test]
fn frozen_weyl_values() {
    // Roots of m^2 + (z - v) m + 1 = 0 with unit hopping.
    let above = tail_m(1.0, 0.0, Complex64::new(3.0, 0.0));
    assert!((above.re + 0.381_966_011_250_105_1).abs() < 1e-15);
    let band = tail_m(1.0, 0.0, Complex64::new(1.0, 0.0));
    assert!((band - Complex64::new(-0.5, 0.866_025_403_784_438_6)).norm() < 1e-15);
    let shifted = tail_m(2.0, 1.0, Complex64::new(1.0, 0.0));
    assert!((shifted - Complex64::new(0.0, 0.5)).norm() < 1e-15);
}

#[test]
fn free_chain_is_reflectionless_and_m_criterion_agrees() {
    let spec = ChainSpec::free(1.0, 2.0).with_center(3);
    for e in [-1.9, -0.4, 0.0, 1.3] {
        assert!(m_residual(&spec, e) < 1e-12);
        assert!(funnyform_residual(&spec, e).unwrap() < 1e-12);
        assert!(reservoir_density(&spec, Side::Right, e) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_chains_have_unitary_symmetric_s(seed in 0u64..10_000, frac in 0.01f64..0.99) {
        let spec = random_spec(seed);
        let band = ac_band(&spec);
        let (lo, hi) = band.common.unwrap();
        let e = lo + frac * (hi - lo);
        let s = scattering_matrix(&spec, e).unwrap();
        prop_assert!(s.unitarity_residual() < 1e-10);
        prop_assert!(s.symmetry_residual() < 1e-10);
        prop_assert!(funnyform_residual(&spec, e).unwrap() < 1e-9);
        prop_assert!(half_line_m(&spec, Side::Left, -spec.n() - 1, e).im > 0.0);
    }

    #[test]
    fn herglotz_everywhere(seed in 0u64..10_000, e in -6.0f64..6.0) {
        let spec = random_spec(seed);
        for side in [Side::Left, Side::Right] {
            for at in [-2i64, 0, 2] {
                prop_assert!(half_line_m(&spec, side, at, e).im >= -1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spin_mgf_matches_pressure_two(seed in 0u64..1000, alpha in -1.0f64..2.0, t in 0.2f64..2.5) {
        let spec = random_spec(seed);
        let chain = build_finite_chain(&spec, 1).unwrap();
        let sys = build_spin_system(&spec, 1).unwrap();
        let mu = fcs_measure(&sys, t).unwrap();
        let f = entropic_functional(&chain, FunctionalKind::Pressure(2.0), t, alpha).unwrap();
        prop_assert!((fcs_mgf(&mu, t, alpha) - f).abs() < 1e-8);
        prop_assert!((mu.total() - 1.0).abs() < 1e-10);
    }
}
