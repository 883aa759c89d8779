//! Second variation, Morse index and the area-index comparison checks.

mod area;
mod checks;
mod hessian;
mod morse;

pub use area::{
    area_form_value, area_index_form, area_index_form_signed, normal_field, NormalField,
    DEFAULT_BRANCH_TOL,
};
pub use checks::{
    comparison_band, hersch_bound_check, index_comparison_check, index_comparison_with, HerschReport,
    IndexComparison,
};
pub use hessian::{
    assemble_second_variation, assemble_second_variation_with, DofMap, HessianOptions,
    HessianSystem,
};
pub use morse::{
    default_index_tol, morse_index, morse_index_with, SpectralReport, DEFAULT_K, DENSE_LIMIT,
    RESIDUAL_TOL,
};
