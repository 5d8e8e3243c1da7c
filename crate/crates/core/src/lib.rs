//! Entropic fluctuations of open XY spin chains.
//!
//! The chain is handled through its one-particle Jacobi matrix: exact determinant
//! formulas at finite volume ([`fermion`]), a brute-force many-body check ([`spin`]),
//! boundary Green's functions and the two-channel scattering matrix ([`scattering`]),
//! large-time limits as band integrals ([`asymptotics`]) and their Legendre transforms
//! ([`deviations`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod chain;
pub mod deviations;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod quad;
pub mod scattering;
pub mod spin;

pub use asymptotics::{ness_flux, LimitKind, LimitModel, NessFlux};
pub use chain::{build_finite_chain, parse_chain_spec, ChainSpec, FiniteChain, Side, Site};
pub use deviations::{clt_variance, rate_function, CltVariance, RateFunctionQuery, RateSource, RateValue};
pub use error::{Error, Result};
pub use fermion::{entropic_functional, evolve_k, heat_flux, mean_entropy_production, Dynamics, FunctionalKind};
pub use linalg::{herm_fn, HermitianMatrix, ScalarFn};
pub use scattering::{
    ac_band, detect_bound_states, full_green, half_line_m, reflectionless_test, scattering_matrix, tail_m, AcBand,
    MBoundary, SMatrix,
};
pub use spin::{build_spin_system, fcs_measure, fcs_mgf, FcsMeasure, SpinSystem};
