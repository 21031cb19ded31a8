//! Separable nonnegative matrix factorization.
//!
//! A nonnegative `d x n` matrix `X` is k-separable when `X = X_I H` for some
//! set `I` of `k` of its own columns (the anchors) and nonnegative `H`. When
//! the remaining columns are convex combinations of the anchors, the anchors
//! are exactly the extreme points of the column polytope, and any linear
//! functional is maximized and minimized at anchors. The random-projection
//! extractors ([`cg_nmf`], [`gp_nmf`]) exploit that by projecting onto `m`
//! random directions and keeping the argmax and argmin of each.

mod anchors;
mod baselines;
mod generate;
mod geometry;
mod nnls;

pub use anchors::{anchors_from_projection, cg_nmf, gp_nmf, AnchorSet};
pub use baselines::{spa, xray, XrayResult};
pub use generate::{generate_noisy_polytope, generate_separable, SeparableInstance};
pub use geometry::{
    column_solid_angles, condition_number, extreme_points_bruteforce, in_convex_hull, normal_cone_member,
    projections_for_recovery, solid_angle_mc, solid_angles_all, srht_counterexample_check, CounterexampleReport,
    KappaVariant, PolytopeSpec, SolidAngle,
};
pub use nnls::{
    nnls_active_set, nnls_solve, nnls_solve_column, relative_error, relative_error_curve, NnlsOptions,
};
