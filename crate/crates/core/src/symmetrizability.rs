//! Symmetrizability and invertibility decisions for an AVC.
//!
//! Maximum-error symmetrizability asks whether, for every pair of input
//! letters, the jammer can make the two achievable output-distribution hulls
//! overlap; it is decided pair by pair with one hull-intersection LP each.
//! Average-error symmetrizability asks for a single stochastic map
//! `U ∈ C(X, S)` equalizing the two cross-symmetrized channels, one joint
//! feasibility LP. Left-invertibility is a rank condition on the channel
//! matrix view and implies non-symmetrizability under maximum error.

use serde::Serialize;

use crate::channel::{channel_matrix_view, Avc, Channel};
use crate::error::{Error, Result};
use crate::feasibility::{
    hulls_intersect, numerical_rank, solve_feasibility, Feasibility, FeasibilityProblem, HullPair,
    Intersection, DEFAULT_RANK_TOL,
};

/// Witness for the maximum-error symmetrizability verdict: either one common
/// hull point per input pair, or the first pair whose hulls are disjoint.
#[derive(Debug, Clone, Serialize)]
pub enum MaxSymWitness {
    CommonPoints(Vec<PairIntersection>),
    DisjointPair { x: usize, x_prime: usize },
    /// Fewer than two input letters; nothing to symmetrize.
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairIntersection {
    pub x: usize,
    pub x_prime: usize,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxErrorVerdict {
    pub symmetrizable: bool,
    pub witness: MaxSymWitness,
    /// Some pair decision came from the marginal feasibility band.
    pub marginal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AvgErrorVerdict {
    /// `None` when the LP lands in the marginal band and the verdict should
    /// not be trusted either way.
    pub symmetrizable: Option<bool>,
    /// The equalizing map `U ∈ C(X, S)` when one exists.
    pub witness: Option<Channel>,
    pub degenerate: bool,
}

/// Combined report over all three decisions.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizabilityReport {
    pub max_error_symmetrizable: bool,
    pub avg_error_symmetrizable: Option<bool>,
    pub left_invertible: bool,
    pub max_witness: MaxSymWitness,
    pub avg_witness: Option<Channel>,
    pub degenerate: bool,
    pub marginal: bool,
}

fn hull_points(avc: &Avc, x: usize) -> Vec<Vec<f64>> {
    (0..avc.s_size()).map(|s| avc.row(x, s).to_vec()).collect()
}

/// The hull pair `conv{w(·|x,s)}_s` vs `conv{w(·|x',s)}_s` for one input pair.
pub fn pair_hulls(avc: &Avc, x: usize, x_prime: usize) -> Result<HullPair> {
    HullPair::new(hull_points(avc, x), hull_points(avc, x_prime))
}

/// Decides maximum-error symmetrizability: true iff the achievable output
/// hulls intersect for every unordered input pair. Short-circuits on the
/// first disjoint pair, which downstream quantizer construction reuses.
pub fn is_max_error_symmetrizable(avc: &Avc) -> Result<MaxErrorVerdict> {
    if avc.x_size() < 2 {
        return Ok(MaxErrorVerdict {
            symmetrizable: false,
            witness: MaxSymWitness::Degenerate,
            marginal: false,
        });
    }
    let mut common = Vec::new();
    for x in 0..avc.x_size() {
        for x_prime in x + 1..avc.x_size() {
            match hulls_intersect(&pair_hulls(avc, x, x_prime)?)? {
                Intersection::Intersects(point) => {
                    common.push(PairIntersection { x, x_prime, point });
                }
                Intersection::Disjoint { marginal } => {
                    return Ok(MaxErrorVerdict {
                        symmetrizable: false,
                        witness: MaxSymWitness::DisjointPair { x, x_prime },
                        marginal,
                    });
                }
            }
        }
    }
    Ok(MaxErrorVerdict {
        symmetrizable: true,
        witness: MaxSymWitness::CommonPoints(common),
        marginal: false,
    })
}

/// Decides average-error symmetrizability: feasibility of the linear system
/// `Σ_s w(y|x,s) u(s|x') = Σ_s w(y|x',s) u(s|x)` for all `x, x', y` over a
/// single row-stochastic unknown `U ∈ C(X, S)`.
pub fn is_avg_error_symmetrizable(avc: &Avc) -> Result<AvgErrorVerdict> {
    let (nx, ns, ny) = (avc.x_size(), avc.s_size(), avc.y_size());
    if nx < 2 {
        return Ok(AvgErrorVerdict {
            symmetrizable: Some(true),
            witness: Some(Channel::from_rows(vec![vec![1.0 / ns as f64; ns]; nx])?),
            degenerate: true,
        });
    }
    // Variables u(s|x) laid out x-major.
    let nvars = nx * ns;
    let var = |x: usize, s: usize| x * ns + s;
    let mut equality_matrix = Vec::new();
    let mut rhs = Vec::new();
    for x in 0..nx {
        for x_prime in x + 1..nx {
            for y in 0..ny {
                let mut row = vec![0.0; nvars];
                for s in 0..ns {
                    row[var(x_prime, s)] += avc.prob(y, x, s);
                    row[var(x, s)] -= avc.prob(y, x_prime, s);
                }
                equality_matrix.push(row);
                rhs.push(0.0);
            }
        }
    }
    for x in 0..nx {
        let mut row = vec![0.0; nvars];
        for s in 0..ns {
            row[var(x, s)] = 1.0;
        }
        equality_matrix.push(row);
        rhs.push(1.0);
    }
    let prob = FeasibilityProblem {
        equality_matrix,
        rhs,
        nonneg: vec![true; nvars],
    };
    match solve_feasibility(&prob)? {
        Feasibility::Feasible(witness) => {
            let rows = (0..nx)
                .map(|x| {
                    let mut row: Vec<f64> = (0..ns).map(|s| witness[var(x, s)].max(0.0)).collect();
                    let total: f64 = row.iter().sum();
                    for v in row.iter_mut() {
                        *v /= total;
                    }
                    row
                })
                .collect();
            Ok(AvgErrorVerdict {
                symmetrizable: Some(true),
                witness: Some(Channel::from_rows(rows)?),
                degenerate: false,
            })
        }
        Feasibility::Infeasible { marginal } => Ok(AvgErrorVerdict {
            symmetrizable: if marginal { None } else { Some(false) },
            witness: None,
            degenerate: false,
        }),
    }
}

/// Left-invertibility of the `|Y| × (|X||S|)` channel matrix view: full
/// column rank. Necessarily false when `|Y| < |X||S|`.
pub fn is_left_invertible(avc: &Avc) -> Result<bool> {
    let view = channel_matrix_view(avc);
    if avc.y_size() < view.column_count() {
        return Ok(false);
    }
    Ok(numerical_rank(&view.rows, DEFAULT_RANK_TOL)? == view.column_count())
}

/// Whether the deterministic maximum-error capacity is positive, which holds
/// exactly when the AVC is not maximum-error symmetrizable.
pub fn positivity_of_cmax(avc: &Avc) -> Result<bool> {
    Ok(!is_max_error_symmetrizable(avc)?.symmetrizable)
}

/// Runs all three decisions and cross-checks that invertibility implies
/// non-symmetrizability.
pub fn analyze(avc: &Avc) -> Result<SymmetrizabilityReport> {
    let max = is_max_error_symmetrizable(avc)?;
    let avg = is_avg_error_symmetrizable(avc)?;
    let left_invertible = is_left_invertible(avc)?;
    if left_invertible && max.symmetrizable {
        return Err(Error::Internal(
            "left-invertible AVC reported as maximum-error symmetrizable".into(),
        ));
    }
    let degenerate = avc.x_size() < 2;
    Ok(SymmetrizabilityReport {
        max_error_symmetrizable: max.symmetrizable,
        avg_error_symmetrizable: avg.symmetrizable,
        left_invertible,
        max_witness: max.witness,
        avg_witness: avg.witness,
        degenerate,
        marginal: max.marginal,
    })
}
