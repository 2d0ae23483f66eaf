//! In-repo numerical solvers.

pub mod ellipsoid_fit;
pub mod lp;
pub mod psd;
pub mod qp;

pub use ellipsoid_fit::{chebyshev_ball, mvee_of_points, mvie_of_halfspaces};
pub use lp::{solve_lp, LpProblem, LpResult, LpStatus};
pub use psd::psd_linesearch;
pub use qp::{solve_qp, QpProblem, QpResult, QpStatus};
