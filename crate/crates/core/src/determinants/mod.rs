//! Log-determinants: closed forms for circles and tori, the gluing constant
//! `c₀`, and the assembled mapping-torus determinants.

mod closed_form;
mod heat;
mod mapping;

pub use closed_form::{
    circle_det_massive, klein_bottle_det, klein_correction_series, log_one_minus_exp_series, rect_torus_det,
    SeriesValue,
};
pub use heat::{c0_coefficient, zeta_zero_shifted, HeatCoefficients};
pub use mapping::{
    mapping_torus_det_modified, mapping_torus_det_shifted, product_with_circle_det, product_with_circle_det_forms,
    t2_phi_action_multiplicities, t2_phi_det, t2_phi_printed_defect, zeta_minus_half,
};
