//! Bounds on the distribution function of a sum or difference of two random
//! variables with fixed marginals.
//!
//! Given marginal CDFs `F` and `G`, the library computes, for every evaluation
//! point `z`, the infimum and supremum of `P(X + Y <= z)` and `P(X + Y < z)`
//! over all joint laws with those marginals, decides whether each envelope is
//! attained by some joint distribution, constructs and samples the extremal
//! copulas that attain (or approach) the envelopes, and cross-validates every
//! closed-form value against a linear-programming oracle on discrete
//! couplings.
//!
//! Modules:
//! - [`dist`]: exact piecewise-linear CDFs with jumps, quantiles, negation.
//! - [`bounds`]: the four envelope values per point via exact candidate scans.
//! - [`copula`]: the two extremal copula families, exact event probabilities,
//!   sampling, and achievability analysis.
//! - [`oracle`]: a dense-tableau simplex over the transportation polytope plus
//!   an exhaustive vertex enumerator for tiny instances.
//! - [`ite`]: bounds on the CDF of an individual treatment effect from two
//!   observed-arm marginals.
//! - [`verify`]: batteries of cross-checking identities used by the CLI and
//!   the test suite.

pub mod bounds;
pub mod copula;
pub mod dist;
mod exec;
pub mod ite;
pub mod oracle;
pub mod verify;

/// Absolute tolerance for comparisons between probability values.
///
/// Probabilities are the results of arithmetic on user inputs, so they carry
/// rounding; knot abscissae are user-given and compared exactly.
pub const EPS_PROB: f64 = 1e-9;

/// Absolute tolerance used to decide whether a flat quantile-sum piece sits
/// exactly at an evaluation point. Abscissa-scale quantities accumulate only
/// a few ulps of rounding, so this is far below any probability tolerance.
pub(crate) const EPS_LEVEL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid atoms: {0}")]
    InvalidAtoms(String),
    #[error("invalid distribution spec: field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("infeasible marginals: masses sum to {x_total} and {y_total}")]
    InfeasibleMarginals { x_total: f64, y_total: f64 },
    #[error("instance too large: {n}x{m} exceeds limit {limit}")]
    InstanceTooLarge { n: usize, m: usize, limit: usize },
    #[error(
        "internal consistency failure at z = {z}: analytic achievability verdict \
         {analytic} disagrees with numeric verdict {numeric} \
         (bound {bound_value}, achieved {achieved_value})"
    )]
    ConsistencyFailure {
        z: f64,
        analytic: bool,
        numeric: bool,
        bound_value: f64,
        achieved_value: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub use bounds::{
    diff_bounds, rho_w, rho_w_left, sum_bounds, sweep_diff, sweep_sum, tau_w, tau_w_left,
    wd_diff_lower, BoundReport,
};
pub use copula::{
    achievability, eval_copula, exact_prob, sample, AchievabilityReport, BoundKind, CopulaKind,
    ExtremalCopula, Relation,
};
pub use dist::{AtomList, CdfCurve, DistributionSpec, Knot};
pub use ite::{frechet_cell_bounds, ite_bounds, ite_bounds_historical, ArmPair};
pub use oracle::{enumerate_tiny, solve_lp, CouplingLp, CouplingSolution, Sense};
