//! Bounds on the CDF of an individual treatment effect.
//!
//! With a binary treatment, each unit has two potential outcomes; only one is
//! observed. Under randomization (or ignorability) the two outcome marginals
//! are identified from the arms, but their joint law is not, so the CDF of
//! the effect `delta = Y1 - Y0` is only partially identified. The sharp
//! envelope at each `delta` is the difference-bound problem for the arm
//! marginals; the identification step itself is an input contract, not code.

use serde::Serialize;

use crate::bounds::{self, BoundReport};
use crate::dist::CdfCurve;
use crate::Result;

/// The two identified potential-outcome marginals.
#[derive(Debug, Clone)]
pub struct ArmPair {
    /// Outcome CDF under treatment.
    pub treated: CdfCurve,
    /// Outcome CDF under control.
    pub control: CdfCurve,
}

impl ArmPair {
    pub fn new(treated: CdfCurve, control: CdfCurve) -> Self {
        ArmPair { treated, control }
    }
}

/// Sharp bounds on `P(Y1 - Y0 <= delta)` and `P(Y1 - Y0 < delta)`. The lower
/// bound carries the point-mass correction `P(Y0 = y - delta)` that the
/// historical bound omits.
pub fn ite_bounds(arms: &ArmPair, delta: f64) -> Result<BoundReport> {
    bounds::diff_bounds(&arms.treated, &arms.control, delta)
}

/// The historical (valid but non-sharp) lower bound on `P(Y1 - Y0 <= delta)`,
/// reported alongside the sharp bound for gap analysis.
pub fn ite_bounds_historical(arms: &ArmPair, delta: f64) -> f64 {
    bounds::wd_diff_lower(&arms.treated, &arms.control, delta)
}

/// Elementary cell bounds: for events with marginal probabilities `p` and
/// `q`, the joint probability lies in `[max(p + q - 1, 0), min(p, q)]`.
pub fn frechet_cell_bounds(p: f64, q: f64) -> (f64, f64) {
    ((p + q - 1.0).max(0.0), p.min(q))
}

/// One grid row of an ITE analysis.
#[derive(Debug, Clone, Serialize)]
pub struct IteRow {
    pub delta: f64,
    pub sharp_lower: f64,
    pub sharp_upper: f64,
    pub historical_lower: f64,
    pub gap: f64,
}

/// Sharp and historical bounds across a delta grid, with the sharpness gap.
pub fn ite_table(arms: &ArmPair, deltas: &[f64]) -> Result<Vec<IteRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let report = ite_bounds(arms, delta)?;
            let historical = ite_bounds_historical(arms, delta);
            Ok(IteRow {
                delta,
                sharp_lower: report.lower_leq,
                sharp_upper: report.upper_leq,
                historical_lower: historical,
                gap: report.lower_leq - historical,
            })
        })
        .collect()
}
