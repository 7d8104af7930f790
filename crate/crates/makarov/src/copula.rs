//! Extremal copulas attaining (or approaching) the envelope bounds, exact
//! event probabilities under them, sampling, and achievability analysis.
//!
//! Both copula families are ordinal sums of the two Fréchet–Hoeffding
//! extremes: the lower family pairs a comonotone block on `[0,t]^2` with the
//! countermonotone copula on `[t,1]^2`, the upper family mirrors this at
//! threshold `r`. Under either one, `V = G(Y)` is almost surely a
//! deterministic two-branch function of `U = F(X)`, so joint event
//! probabilities reduce to one-dimensional Lebesgue measures of sublevel sets
//! of `u -> F^{-1}(u) + G^{-1}(v(u))`, which are exactly computable for
//! piecewise-linear quantile functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{self, candidates};
use crate::dist::CdfCurve;
use crate::{exec, Error, Result, EPS_LEVEL, EPS_PROB};

/// Which envelope a copula targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CopulaKind {
    /// Attains (when possible) the lower bound; threshold `t`.
    Lower,
    /// Attains the upper bound on `P(X+Y <= z)`; threshold `r`.
    Upper,
}

/// One member of the two extremal families, identified by kind and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalCopula {
    pub kind: CopulaKind,
    pub threshold: f64,
}

impl ExtremalCopula {
    pub fn new(kind: CopulaKind, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidProbability(threshold));
        }
        Ok(ExtremalCopula { kind, threshold })
    }

    pub fn lower(t: f64) -> Result<Self> {
        Self::new(CopulaKind::Lower, t)
    }

    pub fn upper(r: f64) -> Result<Self> {
        Self::new(CopulaKind::Upper, r)
    }

    /// The deterministic coupling branch: `v` as a function of `u` in (0,1).
    fn v_of_u(&self, u: f64) -> f64 {
        match self.kind {
            CopulaKind::Lower => {
                if u <= self.threshold {
                    u
                } else {
                    1.0 + self.threshold - u
                }
            }
            CopulaKind::Upper => {
                if u <= self.threshold {
                    self.threshold - u
                } else {
                    u
                }
            }
        }
    }
}

/// Copula value `C(u, v)`.
pub fn eval_copula(c: &ExtremalCopula, u: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidProbability(u));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidProbability(v));
    }
    let t = c.threshold;
    Ok(match c.kind {
        CopulaKind::Lower => {
            if u >= t && v >= t {
                (u + v - 1.0).max(t)
            } else {
                u.min(v)
            }
        }
        CopulaKind::Upper => {
            if u <= t && v <= t {
                (u + v - t).max(0.0)
            } else {
                u.min(v)
            }
        }
    })
}

/// Draws `n` i.i.d. pairs from the joint law the copula induces on the given
/// marginals. Deterministic for a fixed seed, and identical with and without
/// the `parallel` feature: draws are generated in fixed-size chunks, each on
/// its own counter-derived RNG stream, and concatenated in chunk order.
pub fn sample(c: &ExtremalCopula, f: &CdfCurve, g: &CdfCurve, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let chunks = sample_chunk_count(n);
    let parts = exec::map_indices(chunks, |i| sample_chunk(c, f, g, n, seed, i));
    parts.into_iter().flatten().collect()
}

/// Single-threaded twin of [`sample`]; produces byte-identical output.
pub fn sample_sequential(
    c: &ExtremalCopula,
    f: &CdfCurve,
    g: &CdfCurve,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let chunks = sample_chunk_count(n);
    let parts = exec::map_indices_seq(chunks, |i| sample_chunk(c, f, g, n, seed, i));
    parts.into_iter().flatten().collect()
}

const SAMPLE_CHUNK: usize = 4096;

fn sample_chunk_count(n: usize) -> usize {
    n.div_ceil(SAMPLE_CHUNK)
}

fn sample_chunk(
    c: &ExtremalCopula,
    f: &CdfCurve,
    g: &CdfCurve,
    n: usize,
    seed: u64,
    chunk: usize,
) -> Vec<(f64, f64)> {
    let lo = chunk * SAMPLE_CHUNK;
    let hi = n.min(lo + SAMPLE_CHUNK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64 + 1);
    let mut out = Vec::with_capacity(hi - lo);
    for _ in lo..hi {
        let u = loop {
            let u: f64 = rng.sample(rand::distributions::Open01);
            // u == threshold under the upper kind would map to v = 0, whose
            // quantile is the -inf sentinel; redraw on that null set.
            if !(c.kind == CopulaKind::Upper && u == c.threshold) {
                break u;
            }
        };
        let v = c.v_of_u(u);
        let x = f.quantile(u).expect("u in (0,1)");
        let y = g.quantile(v).expect("v in (0,1)");
        out.push((x, y));
    }
    out
}

/// Event relation for [`exact_prob`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Leq,
    Lt,
}

/// One maximal interval of `(0,1]` on which a generalized inverse is affine:
/// constant across a jump's probability range, or the inverse of a rising
/// segment.
#[derive(Debug, Clone, Copy)]
struct QPiece {
    lo: f64,
    hi: f64,
    /// value(u) = x0 + (u - u0) * slope
    x0: f64,
    u0: f64,
    slope: f64,
}

impl QPiece {
    fn value(&self, u: f64) -> f64 {
        self.x0 + (u - self.u0) * self.slope
    }
}

fn quantile_pieces(curve: &CdfCurve) -> Vec<QPiece> {
    let knots = curve.knots();
    let mut pieces = Vec::with_capacity(2 * knots.len());
    for (i, k) in knots.iter().enumerate() {
        if k.right > k.left {
            pieces.push(QPiece {
                lo: k.left,
                hi: k.right,
                x0: k.x,
                u0: k.left,
                slope: 0.0,
            });
        }
        if i + 1 < knots.len() {
            let next = &knots[i + 1];
            if next.left > k.right {
                pieces.push(QPiece {
                    lo: k.right,
                    hi: next.left,
                    x0: k.x,
                    u0: k.right,
                    slope: (next.x - k.x) / (next.left - k.right),
                });
            }
        }
    }
    pieces
}

/// Locates the piece containing the open cell starting just above `u`.
fn piece_at(pieces: &[QPiece], u: f64) -> &QPiece {
    let i = pieces.partition_point(|p| p.hi <= u);
    pieces.get(i).unwrap_or(&pieces[pieces.len() - 1])
}

/// How `v` depends on `u` on one branch of the deterministic coupling.
#[derive(Debug, Clone, Copy)]
enum VMap {
    Identity,
    /// v = c - u
    Reflected { c: f64 },
}

impl VMap {
    fn v(&self, u: f64) -> f64 {
        match self {
            VMap::Identity => u,
            VMap::Reflected { c } => c - u,
        }
    }

    fn u(&self, v: f64) -> f64 {
        match self {
            VMap::Identity => v,
            VMap::Reflected { c } => c - v,
        }
    }
}

/// Exact probability of `X + Y rel z` under the deterministic coupling the
/// copula induces on `(f, g)`: the Lebesgue measure of
/// `{u in (0,1) : F^{-1}(u) + G^{-1}(v(u)) rel z}`, accumulated cell by cell
/// over the common refinement of both quantile partitions.
pub fn exact_prob(c: &ExtremalCopula, f: &CdfCurve, g: &CdfCurve, z: f64, rel: Relation) -> f64 {
    let fq = quantile_pieces(f);
    let gq = quantile_pieces(g);
    let t = c.threshold;
    let total = match c.kind {
        CopulaKind::Lower => {
            branch_measure(&fq, &gq, 0.0, t, VMap::Identity, z, rel)
                + branch_measure(&fq, &gq, t, 1.0, VMap::Reflected { c: 1.0 + t }, z, rel)
        }
        CopulaKind::Upper => {
            branch_measure(&fq, &gq, 0.0, t, VMap::Reflected { c: t }, z, rel)
                + branch_measure(&fq, &gq, t, 1.0, VMap::Identity, z, rel)
        }
    };
    total.clamp(0.0, 1.0)
}

fn branch_measure(
    fq: &[QPiece],
    gq: &[QPiece],
    u_from: f64,
    u_to: f64,
    vmap: VMap,
    z: f64,
    rel: Relation,
) -> f64 {
    if u_to <= u_from {
        return 0.0;
    }
    // Breakpoints: piece boundaries of F^{-1} in u plus the images of the
    // piece boundaries of G^{-1} under the branch map.
    let mut cuts: Vec<f64> = Vec::with_capacity(fq.len() + gq.len() + 2);
    cuts.push(u_from);
    cuts.push(u_to);
    for p in fq {
        cuts.push(p.lo);
        cuts.push(p.hi);
    }
    for p in gq {
        cuts.push(vmap.u(p.lo));
        cuts.push(vmap.u(p.hi));
    }
    cuts.retain(|&u| u >= u_from && u <= u_to);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut measure = 0.0;
    for w in cuts.windows(2) {
        let (alpha, beta) = (w[0], w[1]);
        if beta <= alpha {
            continue;
        }
        // Locate both pieces by the cell midpoint: a cut produced by the
        // reflected map can land an ulp off the piece boundary it mirrors,
        // and an endpoint lookup would then pick the neighboring piece for
        // the whole cell.
        let mid = 0.5 * (alpha + beta);
        let fp = piece_at(fq, alpha.max(mid.min(beta)));
        // The v-interval of the cell; for reflected maps it runs backwards.
        let (va, vb) = (vmap.v(alpha), vmap.v(beta));
        let (v_lo, v_hi) = (va.min(vb), va.max(vb));
        let gp = piece_at(gq, v_lo.max(vmap.v(mid).min(v_hi)));
        let psi_a = fp.value(alpha) + gp.value(va);
        let psi_b = fp.value(beta) + gp.value(vb);
        let width = beta - alpha;
        if (psi_b - psi_a).abs() <= EPS_LEVEL {
            // Flat cell: classify its level against z, treating levels within
            // the abscissa tolerance of z as exactly z so that the strict /
            // non-strict distinction is preserved under rounding.
            let level = 0.5 * (psi_a + psi_b);
            let counted = if (level - z).abs() <= EPS_LEVEL {
                rel == Relation::Leq
            } else {
                level < z
            };
            if counted {
                measure += width;
            }
        } else {
            // Strictly monotone cell: a single crossing splits it.
            let u_star = alpha + (z - psi_a) * width / (psi_b - psi_a);
            let covered = if psi_b > psi_a {
                (u_star - alpha).clamp(0.0, width)
            } else {
                (beta - u_star).clamp(0.0, width)
            };
            measure += covered;
        }
    }
    measure
}

/// Which bound an achievability question is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    /// The lower bound on `P(X+Y <= z)`.
    LowerLeq,
    /// The upper bound on `P(X+Y < z)`.
    UpperLt,
}

/// Verdict on whether a bound value is attained by some joint law, together
/// with the probability the candidate extremal copula actually achieves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievabilityReport {
    pub bound_kind: BoundKind,
    pub bound_value: f64,
    pub achieved_value: f64,
    pub achievable: bool,
    /// Present exactly when the bound is not achievable: the u-space interval
    /// of the attaining line segment.
    pub witness_interval: Option<(f64, f64)>,
}

/// Decides whether the requested bound at `z` is attained by any coupling of
/// `f` and `g`.
///
/// Two independent routes must agree, or an internal consistency error is
/// raised: an analytic route that looks for a positive-mass plateau of
/// `F(x) + G(z-x)` at the bound level with `F` strictly increasing across it,
/// and a numeric route that compares the bound against the exact probability
/// achieved by the candidate extremal copula (if that copula misses the
/// bound, no other copula attains it).
pub fn achievability(
    f: &CdfCurve,
    g: &CdfCurve,
    z: f64,
    bound_kind: BoundKind,
) -> Result<AchievabilityReport> {
    achievability_with_eps(f, g, z, bound_kind, EPS_PROB)
}

/// [`achievability`] with an explicit tolerance for the numeric route. A
/// negative tolerance can never match, forcing the two routes to disagree;
/// the consistency-failure path is exercised this way in tests.
pub fn achievability_with_eps(
    f: &CdfCurve,
    g: &CdfCurve,
    z: f64,
    bound_kind: BoundKind,
    eps: f64,
) -> Result<AchievabilityReport> {
    match bound_kind {
        BoundKind::LowerLeq => lower_leq_achievability(f, g, z, eps),
        BoundKind::UpperLt => {
            // Duality: sup P(X+Y < z) = 1 - inf P((-X) + (-Y) <= -z), and the
            // reflected copula of the dual lower candidate is exactly the
            // upper candidate here, so verdicts and witnesses carry over.
            let fd = f.negate();
            let gd = g.negate();
            let dual = lower_leq_achievability(&fd, &gd, -z, eps).map_err(|e| match e {
                Error::ConsistencyFailure {
                    analytic,
                    numeric,
                    bound_value,
                    achieved_value,
                    ..
                } => Error::ConsistencyFailure {
                    z,
                    analytic,
                    numeric,
                    bound_value: 1.0 - bound_value,
                    achieved_value: 1.0 - achieved_value,
                },
                other => other,
            })?;
            Ok(AchievabilityReport {
                bound_kind,
                bound_value: (1.0 - dual.bound_value).clamp(0.0, 1.0),
                achieved_value: (1.0 - dual.achieved_value).clamp(0.0, 1.0),
                achievable: dual.achievable,
                witness_interval: dual
                    .witness_interval
                    .map(|(lo, hi)| ((1.0 - hi).clamp(0.0, 1.0), (1.0 - lo).clamp(0.0, 1.0))),
            })
        }
    }
}

fn lower_leq_achievability(
    f: &CdfCurve,
    g: &CdfCurve,
    z: f64,
    eps: f64,
) -> Result<AchievabilityReport> {
    let t = bounds::tau_w(f, g, z);
    let t_left = bounds::tau_w_left(f, g, z);

    // Analytic route: a jump of the bound at z forces attainment; otherwise
    // attainment fails exactly when the objective has a plateau at level t
    // whose image under F carries positive mass.
    let witness = plateau_witness(f, g, z, t);
    let analytic = if t - t_left > EPS_PROB {
        true
    } else {
        witness.is_none()
    };

    // Numeric route: the candidate copula either attains the bound or no
    // copula does.
    let copula = ExtremalCopula::lower(t).expect("bound value is a probability");
    let achieved = exact_prob(&copula, f, g, z, Relation::Leq);
    let numeric = (achieved - t).abs() <= eps;

    if analytic != numeric {
        return Err(Error::ConsistencyFailure {
            z,
            analytic,
            numeric,
            bound_value: t,
            achieved_value: achieved,
        });
    }
    Ok(AchievabilityReport {
        bound_kind: BoundKind::LowerLeq,
        bound_value: t,
        achieved_value: achieved,
        achievable: analytic,
        witness_interval: witness,
    })
}

/// Looks for a maximal x-interval on which `F(x) + G(z-x) - 1` stays at the
/// level `t` (within the probability tolerance) while `F` strictly increases,
/// and returns its u-space image `(F(a), F(b-))` when that image has mass
/// above tolerance. Segment endpoints are the candidate scan points, so each
/// segment is free of interior knots of either marginal.
fn plateau_witness(f: &CdfCurve, g: &CdfCurve, z: f64, t: f64) -> Option<(f64, f64)> {
    let cs = candidates(f, g, z);
    let at_level = |v: f64| (v - t).abs() <= EPS_PROB;

    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(f64, f64)> = None;

    for w in cs.windows(2) {
        let (p, q) = (w[0], w[1]);
        let h_right_of_p = f.eval(p) + g.eval_left(z - p) - 1.0;
        let h_left_of_q = f.eval_left(q) + g.eval(z - q) - 1.0;
        if at_level(h_right_of_p) && at_level(h_left_of_q) {
            let u_lo = f.eval(p);
            let u_hi = f.eval_left(q);
            current = match current {
                None => Some((u_lo, u_hi)),
                Some((lo, hi)) => Some((lo, hi.max(u_hi))),
            };
            // The run extends through q only if the objective holds its level
            // at the junction point itself.
            let h_at_q = f.eval(q) + g.eval(z - q) - 1.0;
            if !at_level(h_at_q) {
                runs.extend(current.take());
            }
        } else {
            runs.extend(current.take());
        }
    }
    runs.extend(current.take());
    runs.into_iter().find(|&(lo, hi)| hi - lo > EPS_PROB)
}
