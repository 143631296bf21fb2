//! Independent validators: spectral-zeta continuation from raw eigenvalue
//! families, heat traces with Poisson-dual resummation, and a collocation
//! solver for the DtN boundary problem.

mod bvp;
pub mod geometries;
mod theta;
mod zeta;

pub use bvp::dtn_ode_oracle;
pub use theta::{heat_trace, heat_trace_direct, heat_trace_dual, RawSpectrum, ThetaFactor, ThetaTerm};
pub use zeta::{spectral_zeta, zeta_det_detailed, zeta_det_oracle, OracleValue};
