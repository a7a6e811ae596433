//! Concrete problem instances: correlation-matrix fitting, nonnegative
//! splines, feedback-control BMIs, feasibility BMIs and random linear SDPs.

mod control;
mod corr;
mod random;
mod spline;

pub use control::{
    build_bmi_feasibility, build_lq_feedback, build_sof_h2, build_sof_hinf, lq_feedback_parts, sof_gain,
    BmiFeasInstance, Mat, Plant, LQ_A, LQ_B,
};
pub use corr::{build_corr_cond, build_nearest_corr, corr_cond_matrix, gen_perturbed_corr, h_ext};
pub use random::{ill_conditioned_lsdp, random_lsdp};
pub use spline::{build_spline, continuity_residuals, cosine_samples, spline_coefficients, spline_eval, uniform_knots};

/// Margin used for strict matrix inequalities: `A ≺ 0` becomes `A + margin·I ⪯ 0`.
pub const STRICT_MARGIN: f64 = 1e-6;

/// Position of entry `(i, j)` in a packed lower-triangular (svec) vector.
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

#[cfg(test)]
mod tests;
