//! Envelope values for the CDF of `X + Y` (and `X - Y`) over all joint laws
//! with fixed marginals.
//!
//! For piecewise-linear-with-jumps marginals, each envelope is the extremum
//! of a piecewise-linear objective `F(x) + G(z - x)` over the line `x + y = z`.
//! Extrema of such an objective occur at knot images or as one-sided limits
//! there, so a finite scan over candidate points is exact:
//!
//! - lower bound on `P(X+Y <= z)`: max over candidates of `F(p) + G(z-p)`,
//! - lower bound on `P(X+Y < z)` and upper bound on `P(X+Y <= z)`: extrema of
//!   the two mixed one-sided forms `F(p-) + G(z-p)` and `F(p) + G((z-p)-)`,
//! - upper bound on `P(X+Y < z)`: min over candidates of `F(p-) + G((z-p)-)`.
//!
//! The mixed forms are exactly the one-sided limits of the objective at a
//! candidate, which is where an infimum (or a left-limit supremum) can hide
//! when a marginal jumps.

use serde::Serialize;

use crate::copula::{self, BoundKind};
use crate::dist::CdfCurve;
use crate::{exec, Result, EPS_PROB};

/// Which value of the marginal to use at a scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

fn eval_side(curve: &CdfCurve, x: f64, side: Side) -> f64 {
    match side {
        Side::Right => curve.eval(x),
        Side::Left => curve.eval_left(x),
    }
}

/// Candidate scan points: every knot of `f` plus the image `z - c` of every
/// knot `c` of `g`. Sorted, deduplicated exactly.
pub(crate) fn candidates(f: &CdfCurve, g: &CdfCurve, z: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = f
        .knots()
        .iter()
        .map(|k| k.x)
        .chain(g.knots().iter().map(|k| z - k.x))
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

/// Extremum over candidates of `F_side(p) + G_side(z - p)` for each of the
/// given side pairs. `maximize` selects sup vs inf.
fn scan(f: &CdfCurve, g: &CdfCurve, z: f64, combos: &[(Side, Side)], maximize: bool) -> f64 {
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    for &p in &candidates(f, g, z) {
        for &(fs, gs) in combos {
            let v = eval_side(f, p, fs) + eval_side(g, z - p, gs);
            best = if maximize { best.max(v) } else { best.min(v) };
        }
    }
    best
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Greatest lower bound on `P(X + Y <= z)` over all couplings of `f` and `g`.
pub fn tau_w(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    let sup = scan(f, g, z, &[(Side::Right, Side::Right)], true);
    clamp01((sup - 1.0).max(0.0))
}

/// Greatest lower bound on `P(X + Y < z)`: the left limit of [`tau_w`] at `z`,
/// computed directly from one-sided evaluations at the same candidate set.
pub fn tau_w_left(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    let sup = scan(
        f,
        g,
        z,
        &[(Side::Left, Side::Right), (Side::Right, Side::Left)],
        true,
    );
    clamp01((sup - 1.0).max(0.0))
}

/// Least upper bound on `P(X + Y <= z)` over all couplings of `f` and `g`.
pub fn rho_w(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    let inf = scan(
        f,
        g,
        z,
        &[(Side::Left, Side::Right), (Side::Right, Side::Left)],
        false,
    );
    clamp01(1.0 + (inf - 1.0).min(0.0))
}

/// Least upper bound on `P(X + Y < z)`: the left limit of [`rho_w`] at `z`.
pub fn rho_w_left(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    let inf = scan(f, g, z, &[(Side::Left, Side::Left)], false);
    clamp01(1.0 + (inf - 1.0).min(0.0))
}

/// Infimum of `F(x) + G(z-x)` over the whole line, via the full one-sided
/// candidate scan. Exposed for the identity checks in [`crate::verify`].
pub fn inf_sum_right(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    scan(
        f,
        g,
        z,
        &[
            (Side::Right, Side::Right),
            (Side::Left, Side::Right),
            (Side::Right, Side::Left),
        ],
        false,
    )
}

/// Infimum of `F(x-) + G(z-x)` over the whole line. Equals [`inf_sum_right`]
/// for every pair of distribution functions; the pair of routes is kept as a
/// cross-check of the scan engine.
pub fn inf_sum_left_limit(f: &CdfCurve, g: &CdfCurve, z: f64) -> f64 {
    scan(
        f,
        g,
        z,
        &[(Side::Left, Side::Right), (Side::Right, Side::Left)],
        false,
    )
}

/// The four envelope values at `z` plus achievability verdicts and, when a
/// bound is unattainable, a witness interval in u-space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub z: f64,
    /// Lower bound on `P(X+Y < z)`.
    pub lower_lt: f64,
    /// Lower bound on `P(X+Y <= z)`.
    pub lower_leq: f64,
    /// Upper bound on `P(X+Y < z)`.
    pub upper_lt: f64,
    /// Upper bound on `P(X+Y <= z)`.
    pub upper_leq: f64,
    pub lower_leq_achievable: bool,
    pub upper_lt_achievable: bool,
    /// Witness interval `(F(a), F(b))` for the attaining x-interval `[a, b]`
    /// when one of the two margin-sensitive bounds is not achievable.
    pub witness: Option<(f64, f64)>,
}

/// Assembles all four bounds on the law of `X + Y` at `z` together with
/// achievability verdicts for the two bounds that can fail to be attained.
pub fn sum_bounds(f: &CdfCurve, g: &CdfCurve, z: f64) -> Result<BoundReport> {
    sum_bounds_with_eps(f, g, z, EPS_PROB)
}

/// [`sum_bounds`] with an explicit numeric-verdict tolerance. A non-positive
/// tolerance deliberately desynchronizes the analytic and numeric
/// achievability routes and is used to exercise the consistency-failure path.
pub fn sum_bounds_with_eps(f: &CdfCurve, g: &CdfCurve, z: f64, eps: f64) -> Result<BoundReport> {
    let lower_leq = tau_w(f, g, z);
    let lower_lt = tau_w_left(f, g, z);
    let upper_leq = rho_w(f, g, z);
    let upper_lt = rho_w_left(f, g, z);
    let lower = copula::achievability_with_eps(f, g, z, BoundKind::LowerLeq, eps)?;
    let upper = copula::achievability_with_eps(f, g, z, BoundKind::UpperLt, eps)?;
    Ok(BoundReport {
        z,
        lower_lt,
        lower_leq,
        upper_lt,
        upper_leq,
        lower_leq_achievable: lower.achievable,
        upper_lt_achievable: upper.achievable,
        witness: lower.witness_interval.or(upper.witness_interval),
    })
}

/// Bounds on `P(X - Y <= delta)` and `P(X - Y < delta)`: the sum problem for
/// `(F, negate(G))`. The negation carries the point-mass correction term
/// `P(Y = y)` into the lower bound automatically.
pub fn diff_bounds(f: &CdfCurve, g: &CdfCurve, delta: f64) -> Result<BoundReport> {
    sum_bounds(f, &g.negate(), delta)
}

pub fn diff_bounds_with_eps(f: &CdfCurve, g: &CdfCurve, delta: f64, eps: f64) -> Result<BoundReport> {
    sum_bounds_with_eps(f, &g.negate(), delta, eps)
}

/// The historical lower bound on `P(X - Y <= delta)`:
/// `sup_{x-y=delta} max(F(x) - G(y), 0)`, without the point-mass term.
/// Valid but not sharp when `G` has atoms; never exceeds the sharp bound.
pub fn wd_diff_lower(f: &CdfCurve, g: &CdfCurve, delta: f64) -> f64 {
    let mut best: f64 = 0.0;
    for p in diff_candidates(f, g, delta) {
        let right = f.eval(p) - g.eval(p - delta);
        let left = f.eval_left(p) - g.eval_left(p - delta);
        best = best.max(right).max(left);
    }
    clamp01(best)
}

/// The historical upper bound on `P(X - Y <= delta)`:
/// `1 + inf_{x-y=delta} min(F(x) - G(y), 0)` via a direct scan. Coincides
/// with the sharp upper bound for every pair of marginals.
pub fn wd_diff_upper(f: &CdfCurve, g: &CdfCurve, delta: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for p in diff_candidates(f, g, delta) {
        let right = f.eval(p) - g.eval(p - delta);
        let left = f.eval_left(p) - g.eval_left(p - delta);
        worst = worst.min(right).min(left);
    }
    clamp01(1.0 + worst)
}

fn diff_candidates(f: &CdfCurve, g: &CdfCurve, delta: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = f
        .knots()
        .iter()
        .map(|k| k.x)
        .chain(g.knots().iter().map(|k| k.x + delta))
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

/// One row of the candidate scan, for debug output.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub x: f64,
    pub y: f64,
    pub f_right: f64,
    pub f_left: f64,
    pub g_right: f64,
    pub g_left: f64,
    pub objective_right: f64,
}

/// The per-candidate value table behind the sum scans at `z`; `y = z - x`.
pub fn scan_table(f: &CdfCurve, g: &CdfCurve, z: f64) -> Vec<ScanRow> {
    candidates(f, g, z)
        .into_iter()
        .map(|x| {
            let y = z - x;
            let f_right = f.eval(x);
            let f_left = f.eval_left(x);
            let g_right = g.eval(y);
            let g_left = g.eval_left(y);
            ScanRow {
                x,
                y,
                f_right,
                f_left,
                g_right,
                g_left,
                objective_right: f_right + g_right - 1.0,
            }
        })
        .collect()
}

/// All pairwise knot sums; between consecutive entries the bounds are
/// piecewise linear in `z` for piecewise-linear marginals.
pub fn knot_sums(f: &CdfCurve, g: &CdfCurve) -> Vec<f64> {
    let mut zs: Vec<f64> = Vec::new();
    for kf in f.knots() {
        for kg in g.knots() {
            zs.push(kf.x + kg.x);
        }
    }
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.dedup();
    zs
}

/// All pairwise knot differences, for the difference problem.
pub fn knot_diffs(f: &CdfCurve, g: &CdfCurve) -> Vec<f64> {
    let mut ds: Vec<f64> = Vec::new();
    for kf in f.knots() {
        for kg in g.knots() {
            ds.push(kf.x - kg.x);
        }
    }
    ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ds.dedup();
    ds
}

/// Sorts, deduplicates, and inserts the midpoint of every consecutive pair;
/// midpoints capture plateau behavior between breakpoints.
pub fn grid_with_midpoints(mut zs: Vec<f64>) -> Vec<f64> {
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.dedup();
    let mut out = Vec::with_capacity(zs.len() * 2);
    for (i, &z) in zs.iter().enumerate() {
        out.push(z);
        if i + 1 < zs.len() {
            out.push(0.5 * (z + zs[i + 1]));
        }
    }
    out
}

/// Default evaluation grid for the sum problem: knot sums plus midpoints.
pub fn suggest_grid_sum(f: &CdfCurve, g: &CdfCurve) -> Vec<f64> {
    grid_with_midpoints(knot_sums(f, g))
}

/// Default evaluation grid for the difference problem.
pub fn suggest_grid_diff(f: &CdfCurve, g: &CdfCurve) -> Vec<f64> {
    grid_with_midpoints(knot_diffs(f, g))
}

/// Evaluates [`sum_bounds`] across a grid, fanning out over worker threads
/// when the `parallel` feature is enabled; rows come back in grid order.
pub fn sweep_sum(f: &CdfCurve, g: &CdfCurve, zs: &[f64]) -> Result<Vec<BoundReport>> {
    exec::map_slice(zs, |&z| sum_bounds(f, g, z))
        .into_iter()
        .collect()
}

/// Single-threaded twin of [`sweep_sum`].
pub fn sweep_sum_sequential(f: &CdfCurve, g: &CdfCurve, zs: &[f64]) -> Result<Vec<BoundReport>> {
    exec::map_slice_seq(zs, |&z| sum_bounds(f, g, z))
        .into_iter()
        .collect()
}

/// Evaluates [`diff_bounds`] across a grid of deltas.
pub fn sweep_diff(f: &CdfCurve, g: &CdfCurve, deltas: &[f64]) -> Result<Vec<BoundReport>> {
    let neg = g.negate();
    exec::map_slice(deltas, |&d| sum_bounds(f, &neg, d))
        .into_iter()
        .collect()
}

pub fn sweep_diff_sequential(f: &CdfCurve, g: &CdfCurve, deltas: &[f64]) -> Result<Vec<BoundReport>> {
    let neg = g.negate();
    exec::map_slice_seq(deltas, |&d| sum_bounds(f, &neg, d))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{bernoulli, AtomList, CdfCurve};
    use proptest::prelude::*;

    fn discrete(pairs: &[(f64, f64)]) -> CdfCurve {
        CdfCurve::from_atoms(&AtomList::new(pairs.to_vec()).unwrap())
    }

    fn table2_treated() -> CdfCurve {
        discrete(&[(0.0, 0.7), (1.0, 0.1), (2.0, 0.2)])
    }

    fn table2_control() -> CdfCurve {
        discrete(&[(0.0, 0.3), (1.0, 0.2), (2.0, 0.5)])
    }

    #[test]
    fn bernoulli_pair_at_one() {
        let f = bernoulli(0.5);
        let g = bernoulli(0.4);
        assert!((tau_w(&f, &g, 1.0) - 0.6).abs() < 1e-15);
        assert!((tau_w_left(&f, &g, 1.0) - 0.1).abs() < 1e-15);
        assert!((rho_w(&f, &g, 1.0) - 1.0).abs() < 1e-15);
        assert!((rho_w_left(&f, &g, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_pair() {
        let f = CdfCurve::uniform(0.0, 1.0).unwrap();
        let g = CdfCurve::uniform(0.0, 1.0).unwrap();
        assert_eq!(tau_w(&f, &g, 1.0), 0.0);
        assert_eq!(tau_w_left(&f, &g, 1.0), 0.0);
        assert_eq!(rho_w_left(&f, &g, 1.0), 1.0);
        for z in [0.25, 0.5, 0.75] {
            assert!((rho_w(&f, &g, z) - z).abs() < 1e-15, "rho at {z}");
            assert_eq!(tau_w(&f, &g, z), 0.0);
        }
    }

    #[test]
    fn point_mass_pair() {
        let f = CdfCurve::point_mass(0.0);
        let g = CdfCurve::point_mass(0.0);
        assert_eq!(tau_w(&f, &g, 0.0), 1.0);
        assert_eq!(rho_w(&f, &g, -1.0), 0.0);
        assert_eq!(tau_w_left(&f, &g, -5.0), 0.0);
        assert_eq!(rho_w_left(&f, &g, 5.0), 1.0);
        // Indicator behavior of all four bounds for degenerate marginals.
        let a = CdfCurve::point_mass(1.0);
        let b = CdfCurve::point_mass(2.0);
        for z in [2.5, 3.0, 3.5] {
            let ind_leq = if 3.0 <= z { 1.0 } else { 0.0 };
            let ind_lt = if 3.0 < z { 1.0 } else { 0.0 };
            assert_eq!(tau_w(&a, &b, z), ind_leq);
            assert_eq!(rho_w(&a, &b, z), ind_leq);
            assert_eq!(tau_w_left(&a, &b, z), ind_lt);
            assert_eq!(rho_w_left(&a, &b, z), ind_lt);
        }
    }

    #[test]
    fn below_support_is_zero() {
        let f = bernoulli(0.3);
        let g = CdfCurve::uniform(0.0, 1.0).unwrap();
        assert_eq!(tau_w_left(&f, &g, -3.0), 0.0);
        assert_eq!(tau_w(&f, &g, -3.0), 0.0);
        assert_eq!(rho_w_left(&f, &g, 7.0), 1.0);
    }

    #[test]
    fn diff_bounds_table2() {
        let arms_f = table2_treated();
        let arms_g = table2_control();
        let cases = [
            (-2.0, 0.2, 0.5),
            (-1.0, 0.4, 0.7),
            (0.0, 0.7, 1.0),
            (1.0, 0.8, 1.0),
            (2.0, 1.0, 1.0),
        ];
        for (delta, lo, hi) in cases {
            let r = diff_bounds(&arms_f, &arms_g, delta).unwrap();
            assert!((r.lower_leq - lo).abs() < 1e-12, "lower at {delta}: {}", r.lower_leq);
            assert!((r.upper_leq - hi).abs() < 1e-12, "upper at {delta}: {}", r.upper_leq);
        }
    }

    #[test]
    fn diff_bounds_degenerate() {
        let c = CdfCurve::point_mass(3.0);
        let r = diff_bounds(&c, &c, 0.0).unwrap();
        assert_eq!(r.lower_leq, 1.0);
        assert_eq!(r.upper_leq, 1.0);
    }

    #[test]
    fn historical_lower_bound() {
        let f = table2_treated();
        let g = table2_control();
        assert_eq!(wd_diff_lower(&f, &g, -2.0), 0.0);
        let sharp = diff_bounds(&f, &g, -2.0).unwrap().lower_leq;
        assert!((sharp - 0.2).abs() < 1e-12);
        // Historical bound at -1 is positive but below the sharp 0.4.
        let hist = wd_diff_lower(&f, &g, -1.0);
        assert!((hist - 0.2).abs() < 1e-12);
        assert!(hist < diff_bounds(&f, &g, -1.0).unwrap().lower_leq);

        // Continuous G: no point masses, so historical equals sharp.
        let u = CdfCurve::uniform(0.0, 1.0).unwrap();
        for delta in [-0.5, 0.0, 0.3, 0.9, 1.5] {
            let sharp = diff_bounds(&f, &u, delta).unwrap().lower_leq;
            assert!((wd_diff_lower(&f, &u, delta) - sharp).abs() < 1e-12);
        }
        // Far above the support both historical and sharp reach 1.
        assert_eq!(wd_diff_lower(&f, &g, 100.0), 1.0);
        assert_eq!(diff_bounds(&f, &g, 100.0).unwrap().lower_leq, 1.0);
    }

    #[test]
    fn upper_bound_coincidence() {
        let f = table2_treated();
        let g = table2_control();
        for delta in [-2.0, -1.5, -1.0, 0.0, 0.5, 1.0, 2.0] {
            let sharp = diff_bounds(&f, &g, delta).unwrap().upper_leq;
            assert!(
                (wd_diff_upper(&f, &g, delta) - sharp).abs() < 1e-12,
                "coincidence at {delta}"
            );
        }
    }

    #[test]
    fn example_31_report() {
        let f = bernoulli(0.5);
        let g = bernoulli(0.4);
        let r = sum_bounds(&f, &g, 1.0).unwrap();
        assert!((r.lower_lt - 0.1).abs() < 1e-15);
        assert!((r.lower_leq - 0.6).abs() < 1e-15);
        assert!(r.lower_leq_achievable);
        assert!(r.upper_lt_achievable);
        assert!(r.witness.is_none());
    }

    #[test]
    fn example_32_report() {
        let f = CdfCurve::uniform(0.0, 1.0).unwrap();
        let g = CdfCurve::uniform(0.0, 1.0).unwrap();
        let r = sum_bounds(&f, &g, 1.0).unwrap();
        assert_eq!(r.lower_leq, 0.0);
        assert!(!r.lower_leq_achievable);
        assert_eq!(r.upper_lt, 1.0);
        assert!(!r.upper_lt_achievable);
        let (a, b) = r.witness.expect("witness for unattained bound");
        assert!((a - 0.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_contains_knot_sums_and_midpoints() {
        let f = bernoulli(0.5);
        let g = bernoulli(0.4);
        let grid = suggest_grid_sum(&f, &g);
        // Knot sums {0,1,2} plus midpoints {0.5, 1.5}.
        assert_eq!(grid, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let dgrid = suggest_grid_diff(&f, &g);
        assert_eq!(dgrid, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn sweep_matches_pointwise_and_order() {
        let f = bernoulli(0.5);
        let g = CdfCurve::uniform(0.0, 1.0).unwrap();
        let zs = suggest_grid_sum(&f, &g);
        let par = sweep_sum(&f, &g, &zs).unwrap();
        let seq = sweep_sum_sequential(&f, &g, &zs).unwrap();
        assert_eq!(par, seq);
        for (r, &z) in par.iter().zip(zs.iter()) {
            assert_eq!(r.z, z);
            assert_eq!(r.lower_leq, tau_w(&f, &g, z));
        }
    }

    fn arb_discrete() -> impl Strategy<Value = CdfCurve> {
        (1usize..5, any::<u64>()).prop_map(|(n, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut xs: Vec<f64> = (0..=n).map(|_| rng.gen_range(-8i32..8) as f64 / 2.0).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            let k = xs.len();
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1..100) as f64).collect();
            let total: f64 = raw.iter().sum();
            let pairs: Vec<(f64, f64)> = xs
                .into_iter()
                .zip(raw.into_iter().map(|w| w / total))
                .collect();
            discrete(&pairs)
        })
    }

    proptest! {
        #[test]
        fn ordering_chain(f in arb_discrete(), g in arb_discrete(), z in -6.0f64..6.0) {
            let t_left = tau_w_left(&f, &g, z);
            let t = tau_w(&f, &g, z);
            let r = rho_w(&f, &g, z);
            let r_left = rho_w_left(&f, &g, z);
            prop_assert!(t_left <= t + EPS_PROB);
            prop_assert!(t <= r + EPS_PROB);
            prop_assert!(t_left <= r_left + EPS_PROB);
            prop_assert!(r_left <= r + EPS_PROB);
        }

        #[test]
        fn monotone_in_z(f in arb_discrete(), g in arb_discrete(), z in -6.0f64..6.0, h in 0.0f64..2.0) {
            prop_assert!(tau_w(&f, &g, z) <= tau_w(&f, &g, z + h) + EPS_PROB);
            prop_assert!(rho_w(&f, &g, z) <= rho_w(&f, &g, z + h) + EPS_PROB);
        }

        #[test]
        fn symmetric_in_marginals(f in arb_discrete(), g in arb_discrete(), z in -6.0f64..6.0) {
            prop_assert!((tau_w(&f, &g, z) - tau_w(&g, &f, z)).abs() < 1e-12);
            prop_assert!((rho_w(&f, &g, z) - rho_w(&g, &f, z)).abs() < 1e-12);
        }

        #[test]
        fn inf_scan_routes_agree(f in arb_discrete(), g in arb_discrete(), z in -6.0f64..6.0) {
            prop_assert_eq!(inf_sum_right(&f, &g, z), inf_sum_left_limit(&f, &g, z));
        }

        #[test]
        fn right_continuous_in_z(f in arb_discrete(), g in arb_discrete(), z in -6.0f64..6.0) {
            let at = tau_w(&f, &g, z);
            let mut h = 1e-3;
            for _ in 0..7 {
                h /= 10.0;
            }
            prop_assert!((tau_w(&f, &g, z + h) - at).abs() <= EPS_PROB);
        }
    }
}
