//! Exact univariate CDFs as piecewise-linear curves with jump discontinuities.
//!
//! A [`CdfCurve`] stores ordered knots `(x, left, right)` where `left = F(x-)`
//! and `right = F(x)`. Between consecutive knots the CDF interpolates linearly
//! from one knot's `right` to the next knot's `left`; it is 0 below the first
//! knot and 1 above the last. This representation covers discrete laws,
//! continuous piecewise-linear laws, and mixtures exactly, and makes the
//! generalized inverse computable in closed form.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS_PROB};

/// One knot of a CDF curve: `left = F(x-)`, `right = F(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

impl Knot {
    pub fn new(x: f64, left: f64, right: f64) -> Self {
        Knot { x, left, right }
    }

    /// Jump mass carried by this knot.
    pub fn jump(&self) -> f64 {
        self.right - self.left
    }
}

/// A right-continuous CDF represented exactly by piecewise-linear segments
/// with jumps. Immutable after construction; all operations are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    knots: Vec<Knot>,
}

/// A discrete law given by its atoms, in increasing order of location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomList {
    atoms: Vec<(f64, f64)>,
}

impl AtomList {
    /// Validates strictly increasing locations, positive masses, total mass 1.
    /// Comparisons are written so that NaN inputs fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidAtoms("no atoms".into()));
        }
        let mut total = 0.0;
        for (i, &(x, p)) in atoms.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidAtoms(format!("atom location {x} not finite")));
            }
            if !(p > 0.0) {
                return Err(Error::InvalidAtoms(format!(
                    "atom mass {p} at x = {x} is not positive"
                )));
            }
            if i > 0 && atoms[i - 1].0 >= x {
                return Err(Error::InvalidAtoms(format!(
                    "locations not strictly increasing at x = {x}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > EPS_PROB {
            return Err(Error::InvalidAtoms(format!("masses sum to {total}, not 1")));
        }
        Ok(AtomList { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|&(x, _)| x).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|&(_, p)| p).collect()
    }
}

impl CdfCurve {
    /// Builds a curve from raw knots, validating every invariant:
    /// strictly increasing abscissae, `0 <= left <= right <= 1` per knot,
    /// monotonicity across knots, `left = 0` at the first knot and
    /// `right = 1` at the last. Redundant zero-mass leading/trailing knots
    /// (flat at 0 or 1) are normalized away so equal laws compare equal.
    pub fn new(mut knots: Vec<Knot>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidCurve("no knots".into()));
        }
        for k in &mut knots {
            // Snap endpoint levels that are within tolerance of exact 0/1.
            if k.left.abs() <= EPS_PROB {
                k.left = 0.0;
            }
            if (k.right - 1.0).abs() <= EPS_PROB {
                k.right = 1.0;
            }
            if (k.left - 1.0).abs() <= EPS_PROB {
                k.left = 1.0;
            }
            if k.right.abs() <= EPS_PROB {
                k.right = 0.0;
            }
        }
        for (i, k) in knots.iter().enumerate() {
            if !k.x.is_finite() {
                return Err(Error::InvalidCurve(format!("knot abscissa {} not finite", k.x)));
            }
            if !(0.0 <= k.left && k.left <= k.right && k.right <= 1.0) {
                return Err(Error::InvalidCurve(format!(
                    "levels out of order at x = {}: left = {}, right = {}",
                    k.x, k.left, k.right
                )));
            }
            if i > 0 {
                if knots[i - 1].x >= k.x {
                    return Err(Error::InvalidCurve(format!(
                        "abscissae not strictly increasing at x = {}",
                        k.x
                    )));
                }
                if knots[i - 1].right > k.left {
                    return Err(Error::InvalidCurve(format!(
                        "not monotone between x = {} and x = {}",
                        knots[i - 1].x,
                        k.x
                    )));
                }
            }
        }
        if knots[0].left != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "first knot has left level {}, expected 0",
                knots[0].left
            )));
        }
        if knots[knots.len() - 1].right != 1.0 {
            return Err(Error::InvalidCurve(format!(
                "last knot has right level {}, expected 1",
                knots[knots.len() - 1].right
            )));
        }
        // Drop leading knots that carry no mass and no ramp.
        while knots.len() >= 2 && knots[0].right == 0.0 && knots[1].left == 0.0 {
            knots.remove(0);
        }
        // Drop trailing knots already flat at 1.
        while knots.len() >= 2
            && knots[knots.len() - 1].left == 1.0
            && knots[knots.len() - 2].right == 1.0
        {
            knots.pop();
        }
        Ok(CdfCurve { knots })
    }

    /// Step CDF of a discrete law: one jump per atom, no linear segments.
    pub fn from_atoms(atoms: &AtomList) -> CdfCurve {
        let mut knots = Vec::with_capacity(atoms.len());
        let mut cum = 0.0;
        let n = atoms.len();
        for (i, &(x, p)) in atoms.atoms().iter().enumerate() {
            let left = cum;
            cum = if i + 1 == n { 1.0 } else { cum + p };
            knots.push(Knot::new(x, left, cum));
        }
        CdfCurve { knots }
    }

    /// Degenerate law: all mass at `x`.
    pub fn point_mass(x: f64) -> CdfCurve {
        CdfCurve {
            knots: vec![Knot::new(x, 0.0, 1.0)],
        }
    }

    /// Exact uniform law on `[a, b]`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn uniform(a: f64, b: f64) -> Result<CdfCurve> {
        if !(a < b) {
            return Err(Error::InvalidCurve(format!("uniform requires a < b, got [{a}, {b}]")));
        }
        Ok(CdfCurve {
            knots: vec![Knot::new(a, 0.0, 0.0), Knot::new(b, 1.0, 1.0)],
        })
    }

    /// Piecewise-linear discretization of the triangular law on `[a, b]` with
    /// mode `c`, using `n_knots` equally spaced knots. Knot levels equal the
    /// exact family CDF at the knot abscissae, so the sup-norm error is
    /// bounded by the family CDF's modulus of continuity over one grid cell.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn triangular(a: f64, b: f64, c: f64, n_knots: usize) -> Result<CdfCurve> {
        if !(a < b) || !(a <= c && c <= b) {
            return Err(Error::InvalidCurve(format!(
                "triangular requires a < b and a <= c <= b, got a = {a}, b = {b}, c = {c}"
            )));
        }
        if n_knots < 2 {
            return Err(Error::InvalidCurve(format!(
                "triangular discretization needs at least 2 knots, got {n_knots}"
            )));
        }
        let cdf = |x: f64| -> f64 {
            if x <= a {
                0.0
            } else if x >= b {
                1.0
            } else if x < c {
                (x - a) * (x - a) / ((b - a) * (c - a))
            } else if x > c {
                1.0 - (b - x) * (b - x) / ((b - a) * (b - c))
            } else {
                // x == c; both branches agree when a < c < b.
                (c - a) / (b - a)
            }
        };
        let n = n_knots;
        let mut knots = Vec::with_capacity(n);
        for i in 0..n {
            let x = a + (b - a) * (i as f64) / ((n - 1) as f64);
            let v = if i == 0 {
                0.0
            } else if i + 1 == n {
                1.0
            } else {
                cdf(x)
            };
            knots.push(Knot::new(x, v, v));
        }
        CdfCurve::new(knots)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Smallest knot abscissa (the support lies in `[min_x, max_x]`).
    pub fn min_x(&self) -> f64 {
        self.knots[0].x
    }

    pub fn max_x(&self) -> f64 {
        self.knots[self.knots.len() - 1].x
    }

    /// `F(x)`, right-continuous; 0 below the support, 1 above.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x < self.knots[0].x {
            return 0.0;
        }
        if x >= self.knots[n - 1].x {
            return 1.0;
        }
        // Index of the last knot with abscissa <= x; x < last knot here.
        let i = self.knots.partition_point(|k| k.x <= x) - 1;
        let k = &self.knots[i];
        if k.x == x {
            return k.right;
        }
        let next = &self.knots[i + 1];
        let t = (x - k.x) / (next.x - k.x);
        k.right + t * (next.left - k.right)
    }

    /// `F(x-)`, the left limit; equals `eval(x)` except at jump points.
    pub fn eval_left(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0].x {
            return 0.0;
        }
        if x > self.knots[n - 1].x {
            return 1.0;
        }
        let i = self.knots.partition_point(|k| k.x < x) - 1;
        let k = &self.knots[i];
        if i + 1 < n && self.knots[i + 1].x == x {
            return self.knots[i + 1].left;
        }
        if k.x == x {
            return k.left;
        }
        let next = &self.knots[i + 1];
        let t = (x - k.x) / (next.x - k.x);
        k.right + t * (next.left - k.right)
    }

    /// Jump mass at `x`: `F(x) - F(x-)`.
    pub fn jump_at(&self, x: f64) -> f64 {
        self.eval(x) - self.eval_left(x)
    }

    /// Generalized inverse `F^{-1}(u) = inf{x : F(x) >= u}`.
    ///
    /// `quantile(0)` is `-inf` (every real satisfies `F(x) >= 0`); samplers
    /// draw from the open interval `(0, 1)` so the sentinel is never consumed.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidProbability(u));
        }
        if u == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        // First knot whose right level reaches u; exists because the last
        // right level is exactly 1.
        let i = self.knots.partition_point(|k| k.right < u);
        debug_assert!(i < self.knots.len());
        let k = &self.knots[i];
        if i == 0 || u > k.left {
            // u is covered by the jump at this knot (or lies below the first
            // knot's right level, where F is 0 before the knot).
            return Ok(k.x);
        }
        let prev = &self.knots[i - 1];
        // prev.right < u <= k.left: cross the rising segment.
        debug_assert!(k.left > prev.right);
        Ok(prev.x + (u - prev.right) * (k.x - prev.x) / (k.left - prev.right))
    }

    /// CDF of `-X`: jump masses move from `x` to `-x`, ramps are mirrored.
    pub fn negate(&self) -> CdfCurve {
        let knots = self
            .knots
            .iter()
            .rev()
            .map(|k| Knot::new(-k.x, 1.0 - k.right, 1.0 - k.left))
            .collect();
        CdfCurve { knots }
    }

    /// True when the curve is a pure step function (no rising segments).
    pub fn is_discrete(&self) -> bool {
        self.knots
            .windows(2)
            .all(|w| w[0].right == w[1].left)
            && self.knots.iter().any(|k| k.jump() > 0.0)
    }

    /// Atoms of a discrete curve; `None` when any segment rises.
    pub fn atoms(&self) -> Option<AtomList> {
        if !self.is_discrete() {
            return None;
        }
        let atoms: Vec<(f64, f64)> = self
            .knots
            .iter()
            .filter(|k| k.jump() > 0.0)
            .map(|k| (k.x, k.jump()))
            .collect();
        AtomList::new(atoms).ok()
    }
}

/// External JSON description of a marginal distribution.
///
/// ```json
/// {"type":"discrete","atoms":[{"x":0,"p":0.3},{"x":1,"p":0.7}]}
/// {"type":"piecewise_linear","knots":[{"x":0,"left":0,"right":0},{"x":1,"left":1,"right":1}]}
/// {"type":"uniform","a":0,"b":1}
/// {"type":"triangular","a":0,"b":1,"c":1,"n_knots":101}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Discrete { atoms: Vec<SpecAtom> },
    PiecewiseLinear { knots: Vec<Knot> },
    Uniform { a: f64, b: f64 },
    Triangular { a: f64, b: f64, c: f64, n_knots: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecAtom {
    pub x: f64,
    pub p: f64,
}

impl DistributionSpec {
    /// Parses a spec from JSON text, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec {
            field: "json".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Materializes the described law as a curve, validating mass/level sums.
    pub fn to_curve(&self) -> Result<CdfCurve> {
        match self {
            DistributionSpec::Discrete { atoms } => {
                let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a.x, a.p)).collect();
                let atoms = AtomList::new(pairs).map_err(|e| Error::InvalidSpec {
                    field: "atoms".into(),
                    message: e.to_string(),
                })?;
                Ok(CdfCurve::from_atoms(&atoms))
            }
            DistributionSpec::PiecewiseLinear { knots } => {
                CdfCurve::new(knots.clone()).map_err(|e| Error::InvalidSpec {
                    field: "knots".into(),
                    message: e.to_string(),
                })
            }
            DistributionSpec::Uniform { a, b } => {
                CdfCurve::uniform(*a, *b).map_err(|e| Error::InvalidSpec {
                    field: "a/b".into(),
                    message: e.to_string(),
                })
            }
            DistributionSpec::Triangular { a, b, c, n_knots } => {
                CdfCurve::triangular(*a, *b, *c, *n_knots).map_err(|e| Error::InvalidSpec {
                    field: "a/b/c/n_knots".into(),
                    message: e.to_string(),
                })
            }
        }
    }

    /// Canonical spec for an existing curve (always piecewise-linear form,
    /// or discrete form when the curve is a pure step function).
    pub fn from_curve(curve: &CdfCurve) -> Self {
        if let Some(atoms) = curve.atoms() {
            DistributionSpec::Discrete {
                atoms: atoms
                    .atoms()
                    .iter()
                    .map(|&(x, p)| SpecAtom { x, p })
                    .collect(),
            }
        } else {
            DistributionSpec::PiecewiseLinear {
                knots: curve.knots().to_vec(),
            }
        }
    }
}

/// Convenience constructors used across the test suites.
pub fn bernoulli(p: f64) -> CdfCurve {
    let atoms = AtomList::new(vec![(0.0, 1.0 - p), (1.0, p)]).expect("valid Bernoulli");
    CdfCurve::from_atoms(&atoms)
}
