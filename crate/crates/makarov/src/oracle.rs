//! Independent verification engine: optimizes `P(X + Y rel z)` over all
//! couplings of two discrete marginals.
//!
//! A coupling of discrete marginals is a nonnegative matrix with prescribed
//! row and column sums, so the extremes of any event probability are linear
//! programs over the transportation polytope. [`solve_lp`] runs a bespoke
//! dense-tableau primal simplex seeded with the northwest-corner basis and
//! protected by Bland's anti-cycling rule; [`enumerate_tiny`] cross-checks it
//! on small instances by walking every spanning-tree vertex of the polytope
//! with no simplex machinery at all.

use serde::Serialize;

use crate::dist::AtomList;
use crate::{exec, Error, Result};

/// Feasibility tolerance for marginal sums and basic-solution nonnegativity.
const FEAS_EPS: f64 = 1e-9;
/// Pivot / reduced-cost tolerance for the dense tableau.
const PIVOT_EPS: f64 = 1e-9;
/// Hard cap on instance size for the dense tableau.
const SIZE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Event relation used when building objective cells from atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellRelation {
    Leq,
    Lt,
}

/// A discrete coupling optimization instance: marginal atoms with masses, a
/// set of objective cells, and an optimization sense.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingLp {
    pub xs: Vec<f64>,
    pub px: Vec<f64>,
    pub ys: Vec<f64>,
    pub py: Vec<f64>,
    /// Index pairs `(i, j)` whose mass the objective sums.
    pub objective_cells: Vec<(usize, usize)>,
    pub sense: Sense,
}

impl CouplingLp {
    pub fn new(
        xs: Vec<f64>,
        px: Vec<f64>,
        ys: Vec<f64>,
        py: Vec<f64>,
        mut objective_cells: Vec<(usize, usize)>,
        sense: Sense,
    ) -> Result<Self> {
        let n = xs.len();
        let m = ys.len();
        if n == 0 || m == 0 || px.len() != n || py.len() != m {
            return Err(Error::InvalidAtoms(
                "marginal atom and mass lists must be nonempty and aligned".into(),
            ));
        }
        if px.iter().any(|&p| p <= 0.0) || py.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidAtoms("all masses must be positive".into()));
        }
        let x_total: f64 = px.iter().sum();
        let y_total: f64 = py.iter().sum();
        if (x_total - 1.0).abs() > FEAS_EPS
            || (y_total - 1.0).abs() > FEAS_EPS
            || (x_total - y_total).abs() > FEAS_EPS
        {
            return Err(Error::InfeasibleMarginals { x_total, y_total });
        }
        if objective_cells
            .iter()
            .any(|&(i, j)| i >= n || j >= m)
        {
            return Err(Error::InvalidAtoms("objective cell out of range".into()));
        }
        objective_cells.sort_unstable();
        objective_cells.dedup();
        Ok(CouplingLp {
            xs,
            px,
            ys,
            py,
            objective_cells,
            sense,
        })
    }

    /// Instance optimizing `P(X + Y rel z)`: objective cells are selected by
    /// exact comparison of the atom sums against `z`, so callers encoding a
    /// tie must encode it exactly.
    pub fn for_sum_event(
        x: &AtomList,
        y: &AtomList,
        z: f64,
        rel: CellRelation,
        sense: Sense,
    ) -> Result<Self> {
        let xs = x.locations();
        let ys = y.locations();
        let mut cells = Vec::new();
        for (i, &xi) in xs.iter().enumerate() {
            for (j, &yj) in ys.iter().enumerate() {
                let s = xi + yj;
                let hit = match rel {
                    CellRelation::Leq => s <= z,
                    CellRelation::Lt => s < z,
                };
                if hit {
                    cells.push((i, j));
                }
            }
        }
        CouplingLp::new(xs, x.masses(), ys, y.masses(), cells, sense)
    }

    fn n(&self) -> usize {
        self.xs.len()
    }

    fn m(&self) -> usize {
        self.ys.len()
    }

    fn is_objective(&self, cell: (usize, usize)) -> bool {
        self.objective_cells.binary_search(&cell).is_ok()
    }
}

/// An optimal vertex coupling and its objective value.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingSolution {
    pub value: f64,
    /// Row-major coupling matrix; row sums are `px`, column sums are `py`.
    pub coupling: Vec<Vec<f64>>,
}

impl CouplingSolution {
    fn from_matrix(lp: &CouplingLp, coupling: Vec<Vec<f64>>) -> Self {
        let value: f64 = lp
            .objective_cells
            .iter()
            .map(|&(i, j)| coupling[i][j])
            .sum();
        CouplingSolution {
            value: value.clamp(0.0, 1.0),
            coupling,
        }
    }

    /// Largest violation of the transportation constraints.
    pub fn marginal_error(&self, lp: &CouplingLp) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.coupling.iter().enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - lp.px[i]).abs());
        }
        for j in 0..lp.m() {
            let col: f64 = self.coupling.iter().map(|row| row[j]).sum();
            worst = worst.max((col - lp.py[j]).abs());
        }
        worst
    }
}

/// Exact optimum of the coupling LP by dense-tableau primal simplex.
pub fn solve_lp(lp: &CouplingLp) -> Result<CouplingSolution> {
    let (n, m) = (lp.n(), lp.m());
    if n * m > SIZE_LIMIT {
        return Err(Error::InstanceTooLarge {
            n,
            m,
            limit: SIZE_LIMIT,
        });
    }
    let vars = n * m;
    let rows = n + m - 1; // the last column-sum constraint is redundant

    // Constraint matrix in dense form: row sums then column sums (minus one).
    let mut tab = vec![vec![0.0f64; vars + 1]; rows];
    for i in 0..n {
        for j in 0..m {
            tab[i][i * m + j] = 1.0;
        }
        tab[i][vars] = lp.px[i];
    }
    for j in 0..m - 1 {
        for i in 0..n {
            tab[n + j][i * m + j] = 1.0;
        }
        tab[n + j][vars] = lp.py[j];
    }

    // Maximize c.x; flip the sign of c to minimize.
    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let cost: Vec<f64> = (0..vars)
        .map(|v| {
            if lp.is_objective((v / m, v % m)) {
                sign
            } else {
                0.0
            }
        })
        .collect();

    // Northwest-corner rule: a (possibly degenerate) basic feasible start.
    let mut basis = northwest_basis(&lp.px, &lp.py);
    debug_assert_eq!(basis.len(), rows);

    // Put the tableau in canonical form for the starting basis.
    let mut row_of = vec![usize::MAX; rows];
    let mut assigned = vec![false; rows];
    for (k, &(bi, bj)) in basis.iter().enumerate() {
        let col = bi * m + bj;
        let mut pivot_row = usize::MAX;
        let mut best = 0.0f64;
        for r in 0..rows {
            if !assigned[r] && tab[r][col].abs() > best {
                best = tab[r][col].abs();
                pivot_row = r;
            }
        }
        if pivot_row == usize::MAX || best < PIVOT_EPS {
            return Err(Error::InvalidAtoms(
                "degenerate starting basis for transportation tableau".into(),
            ));
        }
        pivot(&mut tab, pivot_row, col);
        assigned[pivot_row] = true;
        row_of[k] = pivot_row;
    }
    // Reorder so basis[r] is the basic variable of tableau row r.
    let mut by_row = vec![(0usize, 0usize); rows];
    for (k, &cell) in basis.iter().enumerate() {
        by_row[row_of[k]] = cell;
    }
    basis = by_row;

    // Reduced costs for the current basis.
    let mut reduced: Vec<f64> = (0..=vars)
        .map(|c| {
            let direct = if c < vars { cost[c] } else { 0.0 };
            let through_basis: f64 = (0..rows)
                .map(|r| cost[basis[r].0 * m + basis[r].1] * tab[r][c])
                .sum();
            direct - through_basis
        })
        .collect();

    // Primal simplex with Bland's rule on both the entering and leaving
    // choices; guaranteed to terminate despite degeneracy.
    let max_iters = 50_000 + 200 * vars;
    for _ in 0..max_iters {
        let entering = (0..vars).find(|&c| reduced[c] > PIVOT_EPS);
        let Some(col) = entering else {
            let mut coupling = vec![vec![0.0f64; m]; n];
            for r in 0..rows {
                let (i, j) = basis[r];
                coupling[i][j] = tab[r][vars].max(0.0);
            }
            return Ok(CouplingSolution::from_matrix(lp, coupling));
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if tab[r][col] > PIVOT_EPS {
                let ratio = tab[r][vars] / tab[r][col];
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - PIVOT_EPS
                            || (ratio < lratio + PIVOT_EPS
                                && basis[r].0 * m + basis[r].1 < basis[lr].0 * m + basis[lr].1)
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            // The transportation polytope is bounded, so this is numerical.
            return Err(Error::InvalidAtoms("unbounded transportation tableau".into()));
        };
        let factor = reduced[col];
        pivot(&mut tab, row, col);
        for c in 0..=vars {
            reduced[c] -= factor * tab[row][c];
        }
        reduced[col] = 0.0;
        basis[row] = (col / m, col % m);
    }
    Err(Error::InvalidAtoms("simplex iteration limit exceeded".into()))
}

fn pivot(tab: &mut [Vec<f64>], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (r, current) in tab.iter_mut().enumerate() {
        if r == row {
            continue;
        }
        let factor = current[col];
        if factor != 0.0 {
            for (v, pv) in current.iter_mut().zip(pivot_row.iter()) {
                *v -= factor * pv;
            }
            current[col] = 0.0;
        }
    }
}

fn northwest_basis(px: &[f64], py: &[f64]) -> Vec<(usize, usize)> {
    let (n, m) = (px.len(), py.len());
    let mut supply = px.to_vec();
    let mut demand = py.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        cells.push((i, j));
        let take = supply[i].min(demand[j]);
        supply[i] -= take;
        demand[j] -= take;
        if i + 1 == n && j + 1 == m {
            break;
        }
        // Advance along whichever marginal was exhausted; every step moves
        // one cell, so the staircase has exactly n + m - 1 cells.
        if i + 1 == n {
            j += 1;
        } else if j + 1 == m || supply[i] <= demand[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

/// Exact optimum by exhausting the basic feasible solutions: every spanning
/// tree of the complete bipartite support graph determines one vertex of the
/// transportation polytope, and some vertex is optimal.
pub fn enumerate_tiny(lp: &CouplingLp) -> Result<CouplingSolution> {
    let (n, m) = (lp.n(), lp.m());
    if n > 3 || m > 3 {
        return Err(Error::InstanceTooLarge { n, m, limit: 9 });
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    let tree_size = n + m - 1;
    let mut best: Option<CouplingSolution> = None;

    let mut chosen = Vec::with_capacity(tree_size);
    enumerate_subsets(&edges, tree_size, 0, &mut chosen, &mut |tree| {
        if let Some(coupling) = tree_flows(n, m, &lp.px, &lp.py, tree) {
            let cand = CouplingSolution::from_matrix(lp, coupling);
            let better = match &best {
                None => true,
                Some(b) => match lp.sense {
                    Sense::Minimize => cand.value < b.value,
                    Sense::Maximize => cand.value > b.value,
                },
            };
            if better {
                best = Some(cand);
            }
        }
    });
    best.ok_or_else(|| Error::InvalidAtoms("no spanning tree yielded a feasible vertex".into()))
}

fn enumerate_subsets<F: FnMut(&[(usize, usize)])>(
    edges: &[(usize, usize)],
    want: usize,
    from: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == want {
        visit(chosen);
        return;
    }
    let need = want - chosen.len();
    for k in from..edges.len() {
        if edges.len() - k < need {
            break;
        }
        chosen.push(edges[k]);
        enumerate_subsets(edges, want, k + 1, chosen, visit);
        chosen.pop();
    }
}

/// Solves for the unique flows on a candidate spanning tree by repeatedly
/// peeling leaves; returns `None` when the edge set is not a tree or the
/// resulting vertex is infeasible (negative flow).
fn tree_flows(
    n: usize,
    m: usize,
    px: &[f64],
    py: &[f64],
    tree: &[(usize, usize)],
) -> Option<Vec<Vec<f64>>> {
    let nodes = n + m;
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(i, j)) in tree.iter().enumerate() {
        degree[i] += 1;
        degree[n + j] += 1;
        incident[i].push(e);
        incident[n + j].push(e);
    }
    // A tree on `nodes` vertices with nodes-1 edges touches every vertex.
    if degree.contains(&0) {
        return None;
    }
    let mut balance: Vec<f64> = px.iter().copied().chain(py.iter().copied()).collect();
    let mut used = vec![false; tree.len()];
    let mut flow = vec![0.0f64; tree.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut remaining = tree.len();

    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        let &e = incident[v].iter().find(|&&e| !used[e]).expect("leaf edge");
        used[e] = true;
        remaining -= 1;
        flow[e] = balance[v];
        let (i, j) = tree[e];
        let other = if v == i { n + j } else { i };
        balance[other] -= balance[v];
        balance[v] = 0.0;
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    if remaining != 0 {
        return None; // the edge set contained a cycle
    }
    if flow.iter().any(|&f| f < -FEAS_EPS) {
        return None;
    }
    let mut coupling = vec![vec![0.0f64; m]; n];
    for (e, &(i, j)) in tree.iter().enumerate() {
        coupling[i][j] = flow[e].max(0.0);
    }
    Some(coupling)
}

/// Solves a batch of instances, fanning out when the `parallel` feature is
/// enabled; results come back in input order.
pub fn solve_many(lps: &[CouplingLp]) -> Result<Vec<CouplingSolution>> {
    exec::map_slice(lps, solve_lp).into_iter().collect()
}

/// Single-threaded twin of [`solve_many`].
pub fn solve_many_sequential(lps: &[CouplingLp]) -> Result<Vec<CouplingSolution>> {
    exec::map_slice_seq(lps, solve_lp).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn bernoulli_pair_lp(rel: CellRelation, sense: Sense) -> CouplingLp {
        let x = AtomList::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let y = AtomList::new(vec![(0.0, 0.6), (1.0, 0.4)]).unwrap();
        CouplingLp::for_sum_event(&x, &y, 1.0, rel, sense).unwrap()
    }

    #[test]
    fn bernoulli_leq_min() {
        let lp = bernoulli_pair_lp(CellRelation::Leq, Sense::Minimize);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - 0.6).abs() < 1e-12);
        assert!(sol.marginal_error(&lp) <= 1e-9);
    }

    #[test]
    fn bernoulli_lt_min() {
        let lp = bernoulli_pair_lp(CellRelation::Lt, Sense::Minimize);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn all_cells_gives_total_mass() {
        let x = AtomList::new(vec![(0.0, 0.25), (2.0, 0.75)]).unwrap();
        let y = AtomList::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        for sense in [Sense::Minimize, Sense::Maximize] {
            let lp = CouplingLp::for_sum_event(&x, &y, 100.0, CellRelation::Leq, sense).unwrap();
            let sol = solve_lp(&lp).unwrap();
            assert!((sol.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_one_by_one() {
        let x = AtomList::new(vec![(1.0, 1.0)]).unwrap();
        let y = AtomList::new(vec![(2.0, 1.0)]).unwrap();
        let hit = CouplingLp::for_sum_event(&x, &y, 3.0, CellRelation::Leq, Sense::Minimize).unwrap();
        assert_eq!(enumerate_tiny(&hit).unwrap().value, 1.0);
        assert_eq!(solve_lp(&hit).unwrap().value, 1.0);
        let miss = CouplingLp::for_sum_event(&x, &y, 3.0, CellRelation::Lt, Sense::Maximize).unwrap();
        assert_eq!(enumerate_tiny(&miss).unwrap().value, 0.0);
    }

    #[test]
    fn enumeration_matches_simplex_on_bernoulli() {
        let lp = bernoulli_pair_lp(CellRelation::Leq, Sense::Minimize);
        let lp_val = solve_lp(&lp).unwrap().value;
        let enum_val = enumerate_tiny(&lp).unwrap().value;
        assert!((lp_val - enum_val).abs() < 1e-12);
        assert!((enum_val - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ternary_outcome_difference_event() {
        // Maximize P(X - Y <= -2) with the observed-arm marginals, encoded
        // as a sum event against the negated second marginal.
        let x = AtomList::new(vec![(0.0, 0.7), (1.0, 0.1), (2.0, 0.2)]).unwrap();
        let y_neg = AtomList::new(vec![(-2.0, 0.5), (-1.0, 0.2), (0.0, 0.3)]).unwrap();
        let lp =
            CouplingLp::for_sum_event(&x, &y_neg, -2.0, CellRelation::Leq, Sense::Maximize).unwrap();
        let sol = enumerate_tiny(&lp).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!((solve_lp(&lp).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_marginals_rejected() {
        let err = CouplingLp::new(
            vec![0.0, 1.0],
            vec![0.5, 0.4],
            vec![0.0],
            vec![1.0],
            vec![],
            Sense::Minimize,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleMarginals { .. }));
    }

    #[test]
    fn instance_size_limits() {
        let lp = CouplingLp::new(
            (0..4).map(|i| i as f64).collect(),
            vec![0.25; 4],
            vec![0.0],
            vec![1.0],
            vec![],
            Sense::Minimize,
        )
        .unwrap();
        assert!(matches!(
            enumerate_tiny(&lp),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(solve_lp(&lp).is_ok());
    }

    #[test]
    fn random_tiny_instances_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..60 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let lp = random_lp(&mut rng, n, m);
            let a = solve_lp(&lp).unwrap();
            let b = enumerate_tiny(&lp).unwrap();
            assert!(
                (a.value - b.value).abs() <= 1e-12,
                "simplex {} vs enumeration {} on {lp:?}",
                a.value,
                b.value
            );
            assert!(a.marginal_error(&lp) <= 1e-9);
        }
    }

    fn random_lp(rng: &mut impl Rng, n: usize, m: usize) -> CouplingLp {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..m).map(|j| j as f64 * 0.5).collect();
        let px = random_masses(rng, n);
        let py = random_masses(rng, m);
        let mut cells = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.gen_bool(0.5) {
                    cells.push((i, j));
                }
            }
        }
        let sense = if rng.gen_bool(0.5) {
            Sense::Minimize
        } else {
            Sense::Maximize
        };
        CouplingLp::new(xs, px, ys, py, cells, sense).unwrap()
    }

    fn random_masses(rng: &mut impl Rng, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1..50) as f64).collect();
        let total: f64 = raw.iter().sum();
        let mut out: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let partial: f64 = out[..k - 1].iter().sum();
        out[k - 1] = 1.0 - partial;
        out
    }
}
