//! Linear feasibility and rank machinery: decide whether two convex hulls of
//! finite point sets intersect, solve small equality-constrained feasibility
//! problems by a phase-1 simplex, and compute numerical rank by complete
//! pivoting.
//!
//! Problems here are tiny (at most a few hundred variables), so the solver
//! favors determinism and robustness: dense tableau, Bland's rule, explicit
//! re-verification of every witness.

use crate::error::{Error, Result};
use crate::prob::Dist;

/// Phase-1 objective above this value certifies infeasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-8;
/// Objectives below this value are treated as exactly feasible; the band
/// between the two thresholds is reported as infeasible with a marginal flag.
pub const MARGINAL_FLOOR: f64 = 1e-10;
/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-12;

/// An equality-constrained feasibility problem `Ax = b` with per-variable
/// nonnegativity flags.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub equality_matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub nonneg: Vec<bool>,
}

/// Outcome of a feasibility solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// A witness satisfying all equalities within `1e-8` and bounds within
    /// `1e-10`.
    Feasible(Vec<f64>),
    /// No solution exists with slack `1e-8`. `marginal` marks phase-1
    /// objectives inside `[1e-10, 1e-8]`, where callers may want to tighten.
    Infeasible { marginal: bool },
}

/// Two point sets on a common simplex whose convex hulls are compared.
#[derive(Debug, Clone)]
pub struct HullPair {
    points_a: Vec<Vec<f64>>,
    points_b: Vec<Vec<f64>>,
}

impl HullPair {
    pub fn new(points_a: Vec<Vec<f64>>, points_b: Vec<Vec<f64>>) -> Result<Self> {
        if points_a.is_empty() || points_b.is_empty() {
            return Err(Error::InvalidInput("empty hull generator set".into()));
        }
        let d = points_a[0].len();
        for p in points_a.iter().chain(points_b.iter()) {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "hull point",
                    expected: d,
                    got: p.len(),
                });
            }
            Dist::new(p.clone())?;
        }
        Ok(Self { points_a, points_b })
    }

    pub fn points_a(&self) -> &[Vec<f64>] {
        &self.points_a
    }

    pub fn points_b(&self) -> &[Vec<f64>] {
        &self.points_b
    }

    pub fn dim(&self) -> usize {
        self.points_a[0].len()
    }
}

/// Outcome of a hull intersection test.
#[derive(Debug, Clone, PartialEq)]
pub enum Intersection {
    /// A point contained in both hulls.
    Intersects(Vec<f64>),
    Disjoint { marginal: bool },
}

impl Intersection {
    pub fn is_disjoint(&self) -> bool {
        matches!(self, Intersection::Disjoint { .. })
    }
}

/// Solves the feasibility problem by a phase-1 simplex.
pub fn solve_feasibility(prob: &FeasibilityProblem) -> Result<Feasibility> {
    Ok(solve_with_dual(prob)?.0)
}

/// Decides whether the convex hulls of the two point sets intersect by
/// feasibility of `Σλ_i a_i = Σμ_j b_j` with simplex constraints on `λ, μ`.
pub fn hulls_intersect(pair: &HullPair) -> Result<Intersection> {
    let prob = hull_problem(pair);
    match solve_feasibility(&prob)? {
        Feasibility::Feasible(witness) => {
            let point = combine(pair.points_a(), &witness[..pair.points_a.len()]);
            Ok(Intersection::Intersects(point))
        }
        Feasibility::Infeasible { marginal } => Ok(Intersection::Disjoint { marginal }),
    }
}

/// Extracts a strictly separating hyperplane `(v, c)` for a disjoint hull
/// pair from the Farkas certificate of the phase-1 program, normalized to
/// `‖v‖₂ = 1` and oriented so `vᵀa < c < vᵀb`.
pub fn separating_hyperplane(pair: &HullPair) -> Result<(Vec<f64>, f64)> {
    let prob = hull_problem(pair);
    let (outcome, dual) = solve_with_dual(&prob)?;
    if let Feasibility::Feasible(_) = outcome {
        return Err(Error::InvalidInput(
            "cannot separate intersecting hulls".into(),
        ));
    }
    let dual = dual.ok_or_else(|| Error::Internal("missing dual certificate".into()))?;
    let d = pair.dim();
    let norm = dual[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Internal(
            "degenerate Farkas certificate (zero normal)".into(),
        ));
    }
    // Farkas gives vᵀa_i ≤ -α < β ≤ vᵀb_j; re-center between the achieved
    // extremes for a symmetric margin.
    let v: Vec<f64> = dual[..d].iter().map(|x| x / norm).collect();
    let max_a = pair
        .points_a()
        .iter()
        .map(|p| dot(&v, p))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_b = pair
        .points_b()
        .iter()
        .map(|p| dot(&v, p))
        .fold(f64::INFINITY, f64::min);
    let (v, max_a, min_b) = if max_a <= min_b {
        (v, max_a, min_b)
    } else {
        // Certificate pointed the other way; flip.
        let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
        let max_a = pair
            .points_a()
            .iter()
            .map(|p| dot(&flipped, p))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_b = pair
            .points_b()
            .iter()
            .map(|p| dot(&flipped, p))
            .fold(f64::INFINITY, f64::min);
        (flipped, max_a, min_b)
    };
    if min_b - max_a <= 0.0 {
        return Err(Error::Internal(format!(
            "hyperplane fails to separate: margin {:.3e}",
            min_b - max_a
        )));
    }
    Ok((v, 0.5 * (max_a + min_b)))
}

/// Numerical rank by Gaussian elimination with complete pivoting. `tol` is
/// relative to the largest absolute entry of the input.
pub fn numerical_rank(rows: &[Vec<f64>], tol: f64) -> Result<usize> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput(format!("nonpositive tolerance {tol}")));
    }
    let n = rows[0].len();
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                what: "matrix row",
                expected: n,
                got: row.len(),
            });
        }
        for &v in row {
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite matrix entry".into()));
            }
        }
        a.push(row.clone());
    }
    let m = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(0);
    }
    let threshold = tol * scale;
    let mut rank = 0;
    for step in 0..m.min(n) {
        let mut best = (step, step, 0.0f64);
        for i in step..m {
            for j in step..n {
                let mag = a[i][j].abs();
                if mag > best.2 {
                    best = (i, j, mag);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        a.swap(step, best.0);
        if best.1 != step {
            for row in a.iter_mut() {
                row.swap(step, best.1);
            }
        }
        let pivot = a[step][step];
        for i in step + 1..m {
            let factor = a[i][step] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in step..n {
                a[i][j] -= factor * a[step][j];
            }
        }
        rank += 1;
    }
    Ok(rank)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(points: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let d = points[0].len();
    let mut out = vec![0.0; d];
    for (p, &c) in points.iter().zip(coeffs) {
        for (o, &v) in out.iter_mut().zip(p) {
            *o += c * v;
        }
    }
    out
}

fn hull_problem(pair: &HullPair) -> FeasibilityProblem {
    let d = pair.dim();
    let na = pair.points_a.len();
    let nb = pair.points_b.len();
    let nvars = na + nb;
    let mut equality_matrix = Vec::with_capacity(d + 2);
    for k in 0..d {
        let mut row = Vec::with_capacity(nvars);
        for p in &pair.points_a {
            row.push(p[k]);
        }
        for p in &pair.points_b {
            row.push(-p[k]);
        }
        equality_matrix.push(row);
    }
    let mut sum_a = vec![0.0; nvars];
    sum_a[..na].fill(1.0);
    let mut sum_b = vec![0.0; nvars];
    sum_b[na..].fill(1.0);
    equality_matrix.push(sum_a);
    equality_matrix.push(sum_b);
    let mut rhs = vec![0.0; d];
    rhs.extend_from_slice(&[1.0, 1.0]);
    FeasibilityProblem {
        equality_matrix,
        rhs,
        nonneg: vec![true; nvars],
    }
}

/// Phase-1 simplex. Returns the feasibility verdict plus, when infeasible,
/// the dual vector (simplex multipliers) over the original constraint rows,
/// which is a Farkas certificate.
fn solve_with_dual(prob: &FeasibilityProblem) -> Result<(Feasibility, Option<Vec<f64>>)> {
    let m = prob.equality_matrix.len();
    let n = prob.nonneg.len();
    if prob.rhs.len() != m {
        return Err(Error::DimensionMismatch {
            what: "rhs",
            expected: m,
            got: prob.rhs.len(),
        });
    }
    for row in &prob.equality_matrix {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                what: "constraint row",
                expected: n,
                got: row.len(),
            });
        }
    }
    for v in prob
        .equality_matrix
        .iter()
        .flat_map(|r| r.iter())
        .chain(prob.rhs.iter())
    {
        if !v.is_finite() {
            return Err(Error::InvalidInput("non-finite problem entry".into()));
        }
    }
    if m == 0 {
        return Ok((Feasibility::Feasible(vec![0.0; n]), None));
    }

    // Free variables are split as x = x⁺ − x⁻; `expanded[k] = (var, sign)`.
    let mut expanded: Vec<(usize, f64)> = Vec::new();
    for (j, &nonneg) in prob.nonneg.iter().enumerate() {
        expanded.push((j, 1.0));
        if !nonneg {
            expanded.push((j, -1.0));
        }
    }
    let ncols = expanded.len() + m;
    let art_base = expanded.len();

    // Tableau rows: structural + artificial columns, rhs made nonnegative.
    let mut flipped = vec![false; m];
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if prob.rhs[i] < 0.0 {
            flipped[i] = true;
            -1.0
        } else {
            1.0
        };
        let mut row = vec![0.0; ncols + 1];
        for (k, &(j, s)) in expanded.iter().enumerate() {
            row[k] = sign * s * prob.equality_matrix[i][j];
        }
        row[art_base + i] = 1.0;
        row[ncols] = sign * prob.rhs[i];
        table.push(row);
    }

    // Reduced costs for the phase-1 objective (minimize sum of artificials)
    // with the all-artificial starting basis.
    let mut cost = vec![0.0; ncols + 1];
    for row in &table {
        for (c, v) in cost.iter_mut().zip(row.iter()) {
            *c -= v;
        }
    }
    for k in 0..m {
        cost[art_base + k] = 0.0;
    }

    let mut basis: Vec<usize> = (art_base..art_base + m).collect();
    let max_pivots = 50_000 + 200 * (m + ncols);
    let mut pivots = 0;
    loop {
        // Bland's rule: lowest-index column with negative reduced cost.
        let entering = (0..ncols).find(|&j| cost[j] < -PIVOT_TOL);
        let Some(entering) = entering else { break };
        let mut leaving: Option<(usize, f64)> = None;
        for (i, row) in table.iter().enumerate() {
            if row[entering] > PIVOT_TOL {
                let ratio = row[ncols] / row[entering];
                let better = match leaving {
                    None => true,
                    Some((cur, best)) => {
                        ratio < best - PIVOT_TOL
                            || (ratio < best + PIVOT_TOL && basis[i] < basis[cur])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((leave_row, _)) = leaving else {
            return Err(Error::Internal(
                "phase-1 simplex reported unbounded".into(),
            ));
        };
        pivot(&mut table, &mut cost, leave_row, entering, ncols);
        basis[leave_row] = entering;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Internal(format!(
                "phase-1 simplex failed to terminate after {pivots} pivots"
            )));
        }
    }

    // cost[ncols] holds the negated objective.
    let objective = -cost[ncols];
    if objective < MARGINAL_FLOOR {
        let mut witness = vec![0.0; n];
        for (i, &col) in basis.iter().enumerate() {
            if col < art_base {
                let (j, sign) = expanded[col];
                witness[j] += sign * table[i][ncols];
            }
        }
        // Bound roundoff: clamp microscopic negatives on nonneg variables.
        for (w, &nonneg) in witness.iter_mut().zip(&prob.nonneg) {
            if nonneg && *w < 0.0 && *w > -1e-10 {
                *w = 0.0;
            }
        }
        verify_witness(prob, &witness)?;
        return Ok((Feasibility::Feasible(witness), None));
    }

    // Simplex multipliers from the reduced costs of the artificial columns;
    // flip back rows whose sign was changed.
    let dual = (0..m)
        .map(|i| {
            let y = 1.0 - cost[art_base + i];
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    let marginal = objective <= FEASIBILITY_SLACK;
    Ok((Feasibility::Infeasible { marginal }, Some(dual)))
}

fn pivot(table: &mut [Vec<f64>], cost: &mut [f64], row: usize, col: usize, ncols: usize) {
    let factor = table[row][col];
    for v in table[row].iter_mut() {
        *v /= factor;
    }
    for i in 0..table.len() {
        if i == row {
            continue;
        }
        let f = table[i][col];
        if f == 0.0 {
            continue;
        }
        for j in 0..=ncols {
            let delta = f * table[row][j];
            table[i][j] -= delta;
        }
        table[i][col] = 0.0;
    }
    let f = cost[col];
    if f != 0.0 {
        for j in 0..=ncols {
            cost[j] -= f * table[row][j];
        }
        cost[col] = 0.0;
    }
}

fn verify_witness(prob: &FeasibilityProblem, witness: &[f64]) -> Result<()> {
    for (j, (&w, &nonneg)) in witness.iter().zip(&prob.nonneg).enumerate() {
        if nonneg && w < -1e-10 {
            return Err(Error::Internal(format!(
                "witness violates nonnegativity at variable {j}: {w:.3e}"
            )));
        }
    }
    for (i, row) in prob.equality_matrix.iter().enumerate() {
        let lhs = dot(row, witness);
        if (lhs - prob.rhs[i]).abs() > FEASIBILITY_SLACK {
            return Err(Error::Internal(format!(
                "witness violates equality {i}: residual {:.3e}",
                lhs - prob.rhs[i]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(d: usize, at: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[at] = 1.0;
        v
    }

    #[test]
    fn simplex_mixture_recovers_target() {
        // λ ≥ 0, Σλ = 1, Id·λ = (0.5, 0.5).
        let prob = FeasibilityProblem {
            equality_matrix: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            rhs: vec![0.5, 0.5, 1.0],
            nonneg: vec![true, true],
        };
        match solve_feasibility(&prob).unwrap() {
            Feasibility::Feasible(w) => {
                assert!((w[0] - 0.5).abs() < 1e-9);
                assert!((w[1] - 0.5).abs() < 1e-9);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn simplex_rejects_out_of_bounds_target() {
        let prob = FeasibilityProblem {
            equality_matrix: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            rhs: vec![2.0, -1.0, 1.0],
            nonneg: vec![true, true],
        };
        assert!(matches!(
            solve_feasibility(&prob).unwrap(),
            Feasibility::Infeasible { marginal: false }
        ));
    }

    #[test]
    fn simplex_rejects_nan() {
        let prob = FeasibilityProblem {
            equality_matrix: vec![vec![f64::NAN]],
            rhs: vec![1.0],
            nonneg: vec![true],
        };
        assert!(solve_feasibility(&prob).is_err());
    }

    #[test]
    fn simplex_handles_free_variables() {
        // x free with x = -2 the only solution.
        let prob = FeasibilityProblem {
            equality_matrix: vec![vec![1.0]],
            rhs: vec![-2.0],
            nonneg: vec![false],
        };
        match solve_feasibility(&prob).unwrap() {
            Feasibility::Feasible(w) => assert!((w[0] + 2.0).abs() < 1e-9),
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn identical_singletons_intersect() {
        let pair = HullPair::new(vec![delta(2, 0)], vec![delta(2, 0)]).unwrap();
        match hulls_intersect(&pair).unwrap() {
            Intersection::Intersects(p) => assert!((p[0] - 1.0).abs() < 1e-9),
            other => panic!("expected intersection, got {other:?}"),
        }
    }

    #[test]
    fn distinct_singletons_disjoint() {
        let pair = HullPair::new(vec![delta(2, 0)], vec![delta(2, 1)]).unwrap();
        assert!(hulls_intersect(&pair).unwrap().is_disjoint());
    }

    #[test]
    fn identical_hulls_in_different_order_intersect() {
        let pair = HullPair::new(
            vec![delta(2, 0), delta(2, 1)],
            vec![delta(2, 1), delta(2, 0)],
        )
        .unwrap();
        assert!(!hulls_intersect(&pair).unwrap().is_disjoint());
    }

    #[test]
    fn xor_hulls_intersect() {
        // Both hulls are the whole binary simplex.
        let pair = HullPair::new(
            vec![delta(2, 0), delta(2, 1)],
            vec![delta(2, 1), delta(2, 0)],
        )
        .unwrap();
        match hulls_intersect(&pair).unwrap() {
            Intersection::Intersects(p) => {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            other => panic!("expected intersection, got {other:?}"),
        }
    }

    #[test]
    fn separating_hyperplane_splits_disjoint_hulls() {
        let pair = HullPair::new(
            vec![delta(3, 0), vec![0.6, 0.4, 0.0]],
            vec![delta(3, 2), vec![0.0, 0.3, 0.7]],
        )
        .unwrap();
        let (v, c) = separating_hyperplane(&pair).unwrap();
        for p in pair.points_a() {
            assert!(super::dot(&v, p) < c);
        }
        for p in pair.points_b() {
            assert!(super::dot(&v, p) > c);
        }
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separating_hyperplane_refuses_intersecting_hulls() {
        let pair = HullPair::new(vec![delta(2, 0)], vec![delta(2, 0)]).unwrap();
        assert!(separating_hyperplane(&pair).is_err());
    }

    #[test]
    fn rank_of_identity() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| delta(4, i)).collect();
        assert_eq!(numerical_rank(&rows, DEFAULT_RANK_TOL).unwrap(), 4);
    }

    #[test]
    fn rank_of_duplicated_columns() {
        let rows = vec![vec![1.0, 1.0], vec![0.0, 0.0]];
        assert_eq!(numerical_rank(&rows, DEFAULT_RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn rank_of_xor_matrix_view() {
        let rows = vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]];
        assert_eq!(numerical_rank(&rows, DEFAULT_RANK_TOL).unwrap(), 2);
    }

    #[test]
    fn rank_rejects_empty() {
        assert!(numerical_rank(&[], DEFAULT_RANK_TOL).is_err());
    }
}
