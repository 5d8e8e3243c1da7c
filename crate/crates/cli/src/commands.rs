//! One function per subcommand. Each returns the rendered output plus any warnings.

use std::fmt::Write as _;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use xyent::deviations::rate_function_with;
use xyent::scattering::REFLECTIONLESS_TOL;
use xyent::spin::jw_spectrum_check;
use xyent::{
    build_finite_chain, build_spin_system, fcs_measure, fcs_mgf, heat_flux, scattering_matrix, ChainSpec, Dynamics,
    FunctionalKind, LimitKind, LimitModel, RateFunctionQuery, RateSource, RateValue, Side,
};

use crate::args::{opt_real, real, Kind};

pub struct Output {
    pub body: String,
    pub warnings: Vec<String>,
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn finite(spec: &ChainSpec, m: usize, times: &[f64], alphas: &[f64], kinds: &[Kind]) -> anyhow::Result<Output> {
    let chain = build_finite_chain(spec, m)?;
    let dynamics = Dynamics::new(&chain);
    let tasks: Vec<(Kind, f64, f64)> =
        kinds.iter().flat_map(|&k| times.iter().flat_map(move |&t| alphas.iter().map(move |&a| (k, t, a)))).collect();
    let values = tasks
        .par_iter()
        .map(|&(k, t, a)| dynamics.functional(k.0, t, a).with_context(|| format!("{k} at t = {t}, alpha = {a}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(tasks.len());
    for (&(k, t, a), v) in tasks.iter().zip(&values) {
        if v.light_cone_violated {
            warnings.push(format!("{k} at t = {t}: light cone reaches the truncation edge at M = {m}"));
        }
        if v.floored > 0 {
            warnings.push(format!("{k} at t = {t}, alpha = {a}: {} Gram eigenvalues floored", v.floored));
        }
        rows.push(vec![k.name().to_string(), opt_real(k.p()), opt_real(k.s()), real(t), real(a), real(v.value)]);
    }
    warnings.dedup();
    Ok(Output { body: csv("kind,p,s,t,alpha,value", rows), warnings })
}

fn limit_kind(kind: Kind) -> LimitKind {
    match kind.0 {
        FunctionalKind::Pressure(p) => LimitKind::EPPlus(p),
        FunctionalKind::Es | FunctionalKind::Gc(_) => LimitKind::EPlus,
    }
}

pub fn converge(
    spec: &ChainSpec,
    sizes: &[usize],
    times: &[f64],
    alpha: f64,
    kind: Kind,
    tol: f64,
) -> anyhow::Result<Output> {
    let model = LimitModel::new(spec, tol)?;
    let limit = model.value(limit_kind(kind), alpha)?;
    let mut warnings = model.warnings();
    if times.contains(&0.0) {
        warnings.push("t = 0 rows skipped".into());
    }
    let times: Vec<f64> = times.iter().copied().filter(|&t| t != 0.0).collect();
    let blocks = sizes
        .par_iter()
        .map(|&m| -> anyhow::Result<Vec<(usize, f64, xyent::fermion::FunctionalValue)>> {
            let chain = build_finite_chain(spec, m)?;
            let d = Dynamics::new(&chain);
            times
                .iter()
                .map(|&t| Ok((m, t, d.functional(kind.0, t, alpha).with_context(|| format!("M = {m}, t = {t}"))?)))
                .collect()
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (m, t, v) in blocks.into_iter().flatten() {
        if v.light_cone_violated {
            warnings.push(format!("{kind} at t = {t}: light cone reaches the truncation edge at M = {m}"));
        }
        let scaled = v.value / t;
        rows.push(vec![m.to_string(), real(t), real(scaled), real((scaled - limit).abs())]);
    }
    Ok(Output { body: csv("M,t,value_over_t,error", rows), warnings })
}

pub fn scatter(spec: &ChainSpec, energies: &[f64]) -> anyhow::Result<Output> {
    let rows = energies
        .par_iter()
        .map(|&e| -> anyhow::Result<Vec<String>> {
            let s = scattering_matrix(spec, e).with_context(|| format!("E = {e}"))?;
            let mut row = vec![real(e)];
            for z in [s.s_ll(), s.s_lr(), s.s_rl(), s.s_rr()] {
                row.push(real(z.re));
                row.push(real(z.im));
            }
            row.push(real(s.s_ll().norm()));
            row.push(real(s.unitarity_residual()));
            row.push((s.s_ll().norm() <= REFLECTIONLESS_TOL).to_string());
            Ok(row)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let header =
        "E,re_s_ll,im_s_ll,re_s_lr,im_s_lr,re_s_rl,im_s_rl,re_s_rr,im_s_rr,abs_s_ll,unitarity_residual,reflectionless";
    Ok(Output { body: csv(header, rows), warnings: Vec::new() })
}

#[derive(Serialize)]
struct NessReport {
    flux_l: f64,
    flux_r: f64,
    sigma_plus: f64,
    bound_state_warning: bool,
    bound_states: Vec<f64>,
}

pub fn ness(spec: &ChainSpec, tol: f64) -> anyhow::Result<Output> {
    let model = LimitModel::new(spec, tol)?;
    let f = model.ness_flux()?;
    let report = NessReport {
        flux_l: f.flux_l,
        flux_r: f.flux_r,
        sigma_plus: f.sigma_plus,
        bound_state_warning: !model.bound_states.is_empty(),
        bound_states: model.bound_states.clone(),
    };
    Ok(Output { body: json(&report)?, warnings: model.warnings() })
}

fn rate_str(v: RateValue) -> String {
    match v {
        RateValue::Finite(x) => real(x),
        RateValue::Infinite => "inf".into(),
    }
}

pub fn ldp(spec: &ChainSpec, thetas: &[f64], tol: f64) -> anyhow::Result<Output> {
    let model = LimitModel::new(spec, tol)?;
    let rate = |source, theta| rate_function_with(&model, &RateFunctionQuery::new(source, theta));
    let rows = thetas
        .par_iter()
        .map(|&theta| -> anyhow::Result<Vec<String>> {
            let ip = rate(RateSource::EPlus, theta)?;
            let fp = rate(RateSource::FcsPlus, theta)?;
            let fm = rate(RateSource::FcsPlus, -theta)?;
            // I_fcs(-theta) = I_fcs(theta) + theta.
            let resid = match (fp, fm) {
                (RateValue::Finite(a), RateValue::Finite(b)) => real(b - a - theta),
                _ => String::new(),
            };
            Ok(vec![real(theta), rate_str(ip), rate_str(fp), resid])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Output { body: csv("theta,I_plus,I_fcs,symmetry_residual", rows), warnings: model.warnings() })
}

#[derive(Serialize)]
struct OracleReport {
    m: usize,
    t: f64,
    alphas: Vec<f64>,
    jw_spectrum_deviation: f64,
    fcs_normalization_error: f64,
    fcs_fluctuation_residual: Option<f64>,
    fcs_mgf_vs_pressure2: f64,
    es_vs_fermion: f64,
    relative_entropy_vs_entropy_production: f64,
    heat_flux_left: f64,
    heat_flux_right: f64,
    max_deviation: f64,
}

pub fn oracle(spec: &ChainSpec, m: usize, t: f64, alphas: &[f64], tol: f64) -> anyhow::Result<Output> {
    if m > 5 {
        bail!("oracle runs need M <= 5, got {m}");
    }
    let chain = build_finite_chain(spec, m)?;
    let sys = build_spin_system(spec, m)?;
    let d = Dynamics::new(&chain);
    let mu = fcs_measure(&sys, t)?;
    let mut mgf = 0.0f64;
    let mut es = 0.0f64;
    for &a in alphas {
        let p2 = d.functional(FunctionalKind::Pressure(2.0), t, a)?.value;
        mgf = mgf.max((fcs_mgf(&mu, t, a) - p2).abs());
        let e = d.functional(FunctionalKind::Es, t, a)?.value;
        es = es.max((sys.es_oracle(t, a) - e).abs());
    }
    let flux = |side| (sys.heat_flux(t, side) - heat_flux(&chain, t, side)).abs();
    let mut report = OracleReport {
        m,
        t,
        alphas: alphas.to_vec(),
        jw_spectrum_deviation: jw_spectrum_check(&sys, &chain)?.max_deviation,
        fcs_normalization_error: (mu.total() - 1.0).abs(),
        fcs_fluctuation_residual: mu.fluctuation_residual(),
        fcs_mgf_vs_pressure2: mgf,
        es_vs_fermion: es,
        relative_entropy_vs_entropy_production: (sys.relative_entropy(t) + t * d.mean_entropy_production(t)).abs(),
        heat_flux_left: flux(Side::Left),
        heat_flux_right: flux(Side::Right),
        max_deviation: 0.0,
    };
    report.max_deviation = [
        report.jw_spectrum_deviation,
        report.fcs_normalization_error,
        report.fcs_fluctuation_residual.unwrap_or(f64::INFINITY),
        report.fcs_mgf_vs_pressure2,
        report.es_vs_fermion,
        report.relative_entropy_vs_entropy_production,
        report.heat_flux_left,
        report.heat_flux_right,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if report.max_deviation > tol {
        warnings.push(format!("oracle deviation {:e} exceeds tolerance {tol:e}", report.max_deviation));
    }
    if mu.grouping_warnings > 0 {
        warnings.push(format!("{} near-coincident FCS atoms merged", mu.grouping_warnings));
    }
    Ok(Output { body: json(&report)?, warnings })
}

pub fn json(value: &impl Serialize) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    writeln!(s)?;
    Ok(s)
}
