//! Zeta-regularized determinants and analytic torsion of metric mapping tori
//! `M × [0, a] / (x, 0) ~ (φ(x), a)` over flat circles and tori.
//!
//! The determinant of the mapping torus is assembled from the product
//! `M × S¹(a/2π)` plus a Fredholm correction built from Dirichlet-to-Neumann
//! eigenblocks; every pathway is cross-checked against the spectral oracles in
//! [`oracle`], which work from raw eigenvalue lists.

pub mod determinants;
pub mod dtn;
pub mod error;
pub mod fredholm;
pub mod oracle;
pub mod spectral_model;
pub mod special;
pub mod summation;
pub mod torsion;
pub mod verify;

pub use error::{Error, Result};
pub use spectral_model::{
    harmonic_actions, EigenBlock, HarmonicActionSet, IsometryKind, IsometrySpec, ManifoldSpec,
    MappingTorusSpec, SpectrumStream,
};

pub use dtn::{boundary_solution, dtn_block, dtn_zero_mode, BoundarySolution, DtnBlock};
pub use fredholm::{finite_block_logdet, fredholm_correction, tail_bound, DetResult, TruncationPolicy};
pub use determinants::{
    c0_coefficient, circle_det_massive, klein_bottle_det, mapping_torus_det_modified, mapping_torus_det_shifted,
    product_with_circle_det, rect_torus_det, t2_phi_action_multiplicities, t2_phi_det, zeta_zero_shifted,
    HeatCoefficients,
};
pub use torsion::{
    analytic_torsion, lefschetz_number, lefschetz_zeta_log, torsion_from_definition, witten_torsion,
    witten_torsion_assembled, LefschetzData,
};

/// Scalar type used by the non-generic layers.
pub type Real = f64;
pub type DtnBlock64 = DtnBlock<f64>;
pub type BoundarySolution64 = BoundarySolution<f64>;
