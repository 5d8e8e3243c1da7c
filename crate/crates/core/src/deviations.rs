//! Legendre transforms of the limiting functionals.
//!
//! With `e` convex, `I(theta) = -inf_alpha (alpha theta + e(alpha))` is attained where
//! `e'(alpha) = -theta`; the root is bracketed geometrically and then bisected.

use serde::Serialize;

use crate::asymptotics::{LimitKind, LimitModel};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// Brackets wider than this in `alpha` mean `theta` is outside the derivative range.
pub const ALPHA_CAP: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateSource {
    EPlus,
    /// `e_{2,+}`, the limiting full counting statistics.
    FcsPlus,
}

impl RateSource {
    pub fn kind(self) -> LimitKind {
        match self {
            RateSource::EPlus => LimitKind::EPlus,
            RateSource::FcsPlus => LimitKind::EPPlus(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFunctionQuery {
    pub source: RateSource,
    pub theta: f64,
    pub growth: f64,
    /// Bracket width in `alpha` at which bisection stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl RateFunctionQuery {
    pub fn new(source: RateSource, theta: f64) -> Self {
        Self { source, theta, growth: 2.0, tol: 1e-10, max_iter: 200 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.growth > 1.0) {
            return Err(Error::Validation(format!("bracket growth must exceed 1, got {}", self.growth)));
        }
        if !self.theta.is_finite() {
            return Err(Error::Validation("theta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateValue {
    Finite(f64),
    Infinite,
}

impl RateValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            RateValue::Finite(x) => Some(x),
            RateValue::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Rate function at `q.theta`, reusing a prepared model.
pub fn rate_function_with(model: &LimitModel, q: &RateFunctionQuery) -> Result<RateValue> {
    q.validate()?;
    if model.is_trivial() {
        return Ok(if q.theta == 0.0 { RateValue::Finite(0.0) } else { RateValue::Infinite });
    }
    let kind = q.source.kind();
    let slope = |alpha: f64| -> Result<f64> { Ok(q.theta + model.derivative(kind, alpha, 1)?) };
    let g0 = slope(0.0)?;
    let (mut lo, mut hi) = if g0 == 0.0 {
        (0.0, 0.0)
    } else {
        let dir: f64 = if g0 > 0.0 { -1.0 } else { 1.0 };
        let mut step: f64 = 1.0;
        let far = loop {
            let a = dir * step;
            if a.abs() > ALPHA_CAP {
                return Ok(RateValue::Infinite);
            }
            if slope(a)?.signum() != g0.signum() {
                break a;
            }
            step *= q.growth;
        };
        let near = dir * step / q.growth;
        let near = if step == 1.0 { 0.0 } else { near };
        if dir > 0.0 {
            (near, far)
        } else {
            (far, near)
        }
    };
    let mut iter = 0;
    while hi - lo > q.tol {
        if iter >= q.max_iter {
            return Err(Error::NoConvergence(format!(
                "rate function at theta = {} after {} bisections",
                q.theta, q.max_iter
            )));
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    let alpha = 0.5 * (lo + hi);
    let e = model.value(kind, alpha)?;
    Ok(RateValue::Finite(-(alpha * q.theta + e)))
}

pub fn rate_function(q: &RateFunctionQuery, spec: &ChainSpec) -> Result<RateValue> {
    rate_function_with(&LimitModel::new(spec, crate::asymptotics::DEFAULT_TOL)?, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltVariance {
    /// Quadrature of the trace formula for `e_+''(0)`.
    pub direct: f64,
    /// Richardson central differences of `e_+` at 0.
    pub finite_difference: f64,
}

pub fn clt_variance_with(model: &LimitModel) -> Result<CltVariance> {
    Ok(CltVariance {
        direct: model.second_derivative_direct(0.0)?,
        finite_difference: model.derivative(LimitKind::EPlus, 0.0, 2)?,
    })
}

pub fn clt_variance(spec: &ChainSpec, tol: f64) -> Result<CltVariance> {
    clt_variance_with(&LimitModel::new(spec, tol)?)
}
