//! Capacity computations: discrete memoryless channel capacity by alternating
//! maximization, the binary-output min-max information value, and lower/upper
//! bounds on the maximum-error capacity under block-restricted jamming.

use serde::Serialize;

use crate::channel::{
    effective_channel, extended_block_avc, quantize_avc, tensor_channels, Avc, Channel,
    COMPOSITE_ALPHABET_GUARD,
};
use crate::error::{Error, Result};
use crate::prob::{mutual_information, Dist};
use crate::quantize::{best_binary_quantizer, SearchDiagnostics};
use crate::symmetrizability::is_max_error_symmetrizable;

const BA_TOL: f64 = 1e-6;
const BA_MAX_ITERATIONS: usize = 100_000;

/// Capacity of a discrete memoryless channel together with a
/// capacity-achieving input distribution.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    /// Capacity in bits per channel use.
    pub capacity: f64,
    pub input: Dist,
    pub iterations: usize,
    /// Width of the upper/lower capacity sandwich at termination.
    pub gap: f64,
}

/// One multiplicative update: returns the next input distribution along with
/// the lower (achieved rate) and upper (max divergence) capacity estimates at
/// the current point.
fn capacity_step(w: &Channel, p: &[f64]) -> (Vec<f64>, f64, f64) {
    let nx = w.input_size();
    let ny = w.output_size();
    let mut marginal = vec![0.0; ny];
    for (x, &px) in p.iter().enumerate() {
        for (y, &wyx) in w.row(x).iter().enumerate() {
            marginal[y] += px * wyx;
        }
    }
    let mut lower = 0.0;
    let mut upper = f64::NEG_INFINITY;
    let mut next = vec![0.0; nx];
    let mut total = 0.0;
    for x in 0..nx {
        // d_x = D(w(·|x) ‖ marginal); capacity lies between Σ p d and max d.
        let mut d = 0.0;
        for (y, &wyx) in w.row(x).iter().enumerate() {
            if wyx > 0.0 {
                d += wyx * (wyx / marginal[y]).log2();
            }
        }
        lower += p[x] * d;
        upper = upper.max(d);
        next[x] = p[x] * 2.0f64.powf(d);
        total += next[x];
    }
    for v in next.iter_mut() {
        *v /= total;
    }
    (next, lower, upper)
}

/// Channel capacity `max_p I(p; W)` by the classic alternating-maximization
/// iteration, stopping once the upper/lower capacity gap drops below 1e-6
/// bits.
///
/// The multiplicative iteration alone has a 1/n tail near support-degenerate
/// optima, so a Newton polish on the concave objective runs periodically; the
/// gap criterion of the plain iteration remains the sole certificate.
pub fn dmc_capacity(w: &Channel) -> Result<CapacityResult> {
    let nx = w.input_size();
    let mut p = vec![1.0 / nx as f64; nx];
    let mut iteration = 0;
    while iteration < BA_MAX_ITERATIONS {
        iteration += 1;
        let (p1, lower, upper) = capacity_step(w, &p);
        if upper - lower < BA_TOL {
            return Ok(CapacityResult {
                capacity: lower.max(0.0),
                input: Dist::normalized(p)?,
                iterations: iteration,
                gap: upper - lower,
            });
        }
        p = p1;
        if iteration % 100 == 0 && nx <= 64 {
            newton_polish(w, &mut p);
        }
    }
    Err(Error::NonConvergence {
        what: "channel capacity iteration",
        iterations: BA_MAX_ITERATIONS,
        gap: BA_TOL,
    })
}

/// One round of damped Newton steps for `max_p I(p; W)` on the active
/// support. `∇I = d − 1/ln2` and `H = −(1/ln2)·W diag(1/q) Wᵀ`, so the KKT
/// system on the support is linear in `(Δp, ν)`. Failures leave `p` as the
/// plain iteration produced it.
fn newton_polish(w: &Channel, p: &mut [f64]) {
    let nx = w.input_size();
    let ny = w.output_size();
    let ln2_inv = 1.0 / std::f64::consts::LN_2;
    let mut current = p.to_vec();
    for _ in 0..25 {
        let mut marginal = vec![0.0; ny];
        for (x, &px) in current.iter().enumerate() {
            for (y, &wyx) in w.row(x).iter().enumerate() {
                marginal[y] += px * wyx;
            }
        }
        let mut divergence = vec![0.0; nx];
        let mut lower = 0.0;
        for x in 0..nx {
            let mut d = 0.0;
            for (y, &wyx) in w.row(x).iter().enumerate() {
                if wyx > 0.0 {
                    d += wyx * (wyx / marginal[y]).log2();
                }
            }
            divergence[x] = d;
            lower += current[x] * d;
        }
        // Letters that currently carry mass or want more of it.
        let support: Vec<usize> = (0..nx)
            .filter(|&x| current[x] > 1e-12 || divergence[x] > lower)
            .collect();
        let k = support.len();
        if k == 0 || k + 1 > 65 {
            return;
        }

        // Augmented system [H 1; 1ᵀ 0]·(Δp, ν) = (−∇I, mass deficit).
        let mut system = vec![vec![0.0; k + 2]; k + 1];
        for (i, &xi) in support.iter().enumerate() {
            for (j, &xj) in support.iter().enumerate() {
                let mut h = 0.0;
                for y in 0..ny {
                    if marginal[y] > 0.0 {
                        h += w.prob(y, xi) * w.prob(y, xj) / marginal[y];
                    }
                }
                system[i][j] = -ln2_inv * h;
            }
            // Light damping keeps the solve stable when rows coincide.
            system[i][i] -= 1e-9;
            system[i][k] = -1.0;
            system[i][k + 1] = -(divergence[xi] - ln2_inv);
        }
        for j in 0..k {
            system[k][j] = 1.0;
        }
        system[k][k + 1] = 1.0 - support.iter().map(|&x| current[x]).sum::<f64>();
        let Some(solution) = solve_dense(&mut system) else {
            return;
        };

        // Longest feasible step toward the stationary point.
        let mut t: f64 = 1.0;
        for (i, &x) in support.iter().enumerate() {
            let delta = solution[i];
            if delta < 0.0 {
                t = t.min(0.999 * (current[x] / -delta));
            }
        }
        if t.is_nan() || t <= 1e-6 {
            return;
        }
        let mut candidate = current.clone();
        for (i, &x) in support.iter().enumerate() {
            candidate[x] = (candidate[x] + t * solution[i]).max(1e-15);
        }
        let total: f64 = candidate.iter().sum();
        for v in candidate.iter_mut() {
            *v /= total;
        }
        let (_, cand_lower, cand_upper) = capacity_step(w, &candidate);
        if cand_lower + 1e-12 < lower {
            return;
        }
        current = candidate;
        p.copy_from_slice(&current);
        if cand_upper - cand_lower < BA_TOL {
            return;
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented matrix
/// (last column is the right-hand side). Returns `None` when singular.
fn solve_dense(system: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = system.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| system[a][col].abs().partial_cmp(&system[b][col].abs()).unwrap())?;
        if system[pivot_row][col].abs() < 1e-14 {
            return None;
        }
        system.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = system[row][col] / system[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..=n {
                let delta = factor * system[col][j];
                system[row][j] -= delta;
            }
        }
    }
    let mut solution = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = system[row][n];
        for j in row + 1..n {
            acc -= system[row][j] * solution[j];
        }
        solution[row] = acc / system[row][row];
    }
    Some(solution)
}

/// Result of the binary-output min-max information computation.
#[derive(Debug, Clone, Serialize)]
pub struct RMaxResult {
    /// Value in bits per channel use.
    pub value: f64,
    /// The minimizing input-to-state map `T ∈ C(X, S)`.
    pub minimizer: Channel,
    /// False when the descent hit its iteration cap before the improvement
    /// window closed; the value is then the best found, not certified.
    pub certified: bool,
    pub iterations: usize,
}

/// The binary-output value `min_T max_p I(p; W(Id ⊗ T))`, the maximum over
/// two-point-support input distributions and the minimum over stochastic
/// input-to-state maps.
///
/// For non-symmetrizable binary-output AVCs this value equals the
/// deterministic maximum-error capacity; for symmetrizable ones it may be
/// positive yet carries no capacity meaning, so callers must gate on the
/// symmetrizability report.
///
/// The inner maximum decomposes over input pairs with a one-dimensional
/// concave search over the mixing weight; the outer minimum is convex
/// (information is convex in the channel, which is affine in `T`) and is
/// solved by projected subgradient descent from the best points of a coarse
/// grid scan.
pub fn r_max_binary(avc: &Avc) -> Result<RMaxResult> {
    if avc.y_size() != 2 {
        return Err(Error::InvalidInput(format!(
            "binary-output formula requires |Y| = 2, got {}",
            avc.y_size()
        )));
    }
    let nx = avc.x_size();
    let ns = avc.s_size();

    if ns == 1 {
        let t = Channel::from_rows(vec![vec![1.0]; nx])?;
        let (value, _, _) = inner_max(avc, &t)?;
        return Ok(RMaxResult {
            value,
            minimizer: t,
            certified: true,
            iterations: 0,
        });
    }

    let grid = state_map_grid(nx, ns);
    let mut scored: Vec<(f64, &Vec<Vec<f64>>)> = Vec::with_capacity(grid.len());
    for rows in &grid {
        let t = Channel::from_rows(rows.clone())?;
        let (value, _, _) = inner_max(avc, &t)?;
        scored.push((value, rows));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let starts: Vec<Vec<Vec<f64>>> = scored.iter().take(3).map(|(_, rows)| (*rows).clone()).collect();
    let mut best_value = scored[0].0;
    let mut best_rows = scored[0].1.clone();
    let mut certified = false;
    let mut iterations = 0;

    for start in starts {
        let (rows, value, iters, converged) = descend_state_map(avc, start)?;
        iterations += iters;
        certified |= converged;
        if value < best_value - 1e-12 {
            best_value = value;
            best_rows = rows;
        }
    }

    Ok(RMaxResult {
        value: best_value.max(0.0),
        minimizer: Channel::from_rows(best_rows)?,
        certified,
        iterations,
    })
}

/// Maximum information over two-point-support inputs for a fixed state map.
/// Returns the value, the achieving pair and its mixing weight.
fn inner_max(avc: &Avc, t: &Channel) -> Result<(f64, (usize, usize), f64)> {
    let w_eff = effective_channel(avc, t)?;
    let nx = avc.x_size();
    if nx == 1 {
        return Ok((0.0, (0, 0), 1.0));
    }
    let mut best = (0.0, (0, 1), 0.5);
    for x in 0..nx {
        for x_prime in x + 1..nx {
            let f = |alpha: f64| -> Result<f64> {
                let mut weights = vec![0.0; nx];
                weights[x] = alpha;
                weights[x_prime] = 1.0 - alpha;
                mutual_information(&Dist::new(weights)?, &w_eff)
            };
            let (alpha, value) = golden_max(f, 0.0, 1.0, 1e-6)?;
            if value > best.0 {
                best = (value, (x, x_prime), alpha);
            }
        }
    }
    Ok(best)
}

/// Golden-section search for the maximum of a concave function on `[a, b]`.
fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

/// Per-row simplex grid over all `|X|` rows of a state map. Falls back to
/// coarser steps when the product grid would explode.
fn state_map_grid(nx: usize, ns: usize) -> Vec<Vec<Vec<f64>>> {
    const CAP: usize = 20_000;
    for denominator in [10usize, 5, 2] {
        let row_choices = compositions(denominator, ns);
        if row_choices.len().checked_pow(nx as u32).is_some_and(|n| n <= CAP) {
            let rows: Vec<Vec<f64>> = row_choices
                .iter()
                .map(|c| c.iter().map(|&k| k as f64 / denominator as f64).collect())
                .collect();
            return cartesian_rows(&rows, nx);
        }
    }
    // Vertices plus barycenter per row.
    let mut rows: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            let mut r = vec![0.0; ns];
            r[s] = 1.0;
            r
        })
        .collect();
    rows.push(vec![1.0 / ns as f64; ns]);
    cartesian_rows(&rows, nx)
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative ints.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut comp = vec![first];
            comp.append(&mut rest);
            out.push(comp);
        }
    }
    out
}

fn cartesian_rows(row_choices: &[Vec<f64>], nx: usize) -> Vec<Vec<Vec<f64>>> {
    let mut grids: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for _ in 0..nx {
        let mut next = Vec::with_capacity(grids.len() * row_choices.len());
        for partial in &grids {
            for row in row_choices {
                let mut t = partial.clone();
                t.push(row.clone());
                next.push(t);
            }
        }
        grids = next;
    }
    grids
}

/// Projected subgradient descent of the outer minimization from one start.
/// Stops when the best value has not improved by 1e-5 bits over the last 50
/// iterations.
fn descend_state_map(
    avc: &Avc,
    start: Vec<Vec<f64>>,
) -> Result<(Vec<Vec<f64>>, f64, usize, bool)> {
    const MAX_ITERATIONS: usize = 800;
    const WINDOW: usize = 50;
    const IMPROVEMENT: f64 = 1e-5;

    let nx = avc.x_size();
    let ns = avc.s_size();
    let mut rows = start;
    let mut best_rows = rows.clone();
    let mut best_value = f64::INFINITY;
    let mut last_improvement = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..MAX_ITERATIONS {
        iterations = k + 1;
        let t = Channel::from_rows(rows.clone())?;
        let (value, (x, x_prime), alpha) = inner_max(avc, &t)?;
        if value < best_value - IMPROVEMENT {
            last_improvement = k;
        }
        if value < best_value {
            best_value = value;
            best_rows = rows.clone();
        }
        if k - last_improvement >= WINDOW {
            converged = true;
            break;
        }

        // Subgradient of the max-information objective at the achieving
        // two-point input.
        let w_eff = effective_channel(avc, &t)?;
        let p = [(x, alpha), (x_prime, 1.0 - alpha)];
        let mut marginal = [0.0f64; 2];
        for &(xi, pi) in &p {
            for y in 0..2 {
                marginal[y] += pi * w_eff.prob(y, xi);
            }
        }
        let mut grad = vec![vec![0.0; ns]; nx];
        for &(xi, pi) in &p {
            if pi == 0.0 {
                continue;
            }
            for s in 0..ns {
                let mut g = 0.0;
                for y in 0..2 {
                    let ratio = safe_log2_ratio(w_eff.prob(y, xi), marginal[y]);
                    g += ratio * avc.prob(y, xi, s);
                }
                grad[xi][s] = pi * g;
            }
        }

        let step = 0.5 / ((k + 1) as f64).sqrt();
        for x_row in 0..nx {
            let moved: Vec<f64> = rows[x_row]
                .iter()
                .zip(&grad[x_row])
                .map(|(&t, &g)| t - step * g)
                .collect();
            rows[x_row] = project_to_simplex(&moved);
        }
    }

    Ok((best_rows, best_value, iterations, converged))
}

fn safe_log2_ratio(num: f64, den: f64) -> f64 {
    let num = num.max(1e-300);
    let den = den.max(1e-300);
    (num / den).log2().clamp(-60.0, 60.0)
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Lower bound on the deterministic maximum-error capacity (bits/use).
#[derive(Debug, Clone, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// Best binary output quantizer found; absent when the AVC is
    /// symmetrizable and the bound is zero.
    pub quantizer: Option<Channel>,
    /// The minimizing state map of the quantized AVC.
    pub adversarial_t: Option<Channel>,
    pub symmetrizable: bool,
    pub certified: bool,
    pub search: Option<SearchDiagnostics>,
}

/// Maximizes the binary-output value over quantizers: positive exactly when
/// the AVC is non-symmetrizable, else zero with the symmetrizable flag.
pub fn lower_bound_unrestricted(avc: &Avc) -> Result<LowerBound> {
    if is_max_error_symmetrizable(avc)?.symmetrizable {
        return Ok(LowerBound {
            value: 0.0,
            quantizer: None,
            adversarial_t: None,
            symmetrizable: true,
            certified: true,
            search: None,
        });
    }
    let search = best_binary_quantizer(avc, |q: &Channel| {
        Ok(r_max_binary(&quantize_avc(avc, q)?)?.value)
    })?;
    let winner = r_max_binary(&quantize_avc(avc, &search.quantizer)?)?;
    Ok(LowerBound {
        value: winner.value,
        quantizer: Some(search.quantizer.clone()),
        adversarial_t: Some(winner.minimizer),
        symmetrizable: false,
        certified: winner.certified,
        search: Some(search.diagnostics),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockLowerBound {
    /// Bits per channel use of the original AVC.
    pub value: f64,
    pub j: usize,
    pub details: LowerBound,
}

/// Block lower bound: extends the AVC so both coder and jammer act per
/// length-`J` block, quantizes, and normalizes per use. Requires all
/// conditional output distributions `w(·|x,s)` to be pairwise distinct; once
/// `J ≥ |X||S|(|Y|−1)` repetition restores left-invertibility, the bound is
/// guaranteed positive, and that guarantee is checked.
pub fn block_lower_bound(avc: &Avc, j: usize) -> Result<BlockLowerBound> {
    require_distinct_conditional_outputs(avc)?;
    let extended = extended_block_avc(avc, j)?;
    let details = lower_bound_unrestricted(&extended)?;
    let value = details.value / j as f64;
    let threshold = avc.x_size() * avc.s_size() * (avc.y_size() - 1);
    if j >= threshold && (value.is_nan() || value <= 0.0) {
        return Err(Error::Internal(format!(
            "block lower bound must be positive at J = {j} ≥ {threshold}, got {value}"
        )));
    }
    Ok(BlockLowerBound { value, j, details })
}

/// Requires every conditional output `w(·|x,s)` to differ from every other,
/// the hypothesis under which repetition makes the channel matrix invertible.
pub fn require_distinct_conditional_outputs(avc: &Avc) -> Result<()> {
    let mut columns: Vec<(usize, usize, &[f64])> = Vec::new();
    for x in 0..avc.x_size() {
        for s in 0..avc.s_size() {
            columns.push((x, s, avc.row(x, s)));
        }
    }
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            let (xa, sa, a) = columns[i];
            let (xb, sb, b) = columns[j];
            let gap = a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0f64, f64::max);
            if gap <= 1e-9 {
                return Err(Error::HypothesisViolation(format!(
                    "conditional outputs coincide: w(·|{xa},{sa}) = w(·|{xb},{sb})"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperBound {
    /// Bits per channel use of the original AVC.
    pub value: f64,
    pub j: usize,
    /// The minimizing i.i.d.-per-block state distribution.
    pub q: Dist,
    pub certified: bool,
    pub evaluations: usize,
}

/// Converse-style block upper bound: the jammer holds an i.i.d.-per-block
/// state drawn from `q`, and the value is `min_q (1/J) · capacity` of the
/// `q`-averaged block channel `X^J → Y^J`. The objective is convex in `q`.
pub fn block_upper_bound(avc: &Avc, j: usize) -> Result<UpperBound> {
    if j == 0 {
        return Err(Error::InvalidInput("block length J = 0".into()));
    }
    guard_power(avc.x_size(), j, "|X|^J")?;
    guard_power(avc.y_size(), j, "|Y|^J")?;
    let ns = avc.s_size();
    let mut evaluations = 0usize;
    let mut objective = |q: &Dist| -> Result<f64> {
        evaluations += 1;
        let avg = averaged_block_channel(avc, j, q)?;
        Ok(dmc_capacity(&avg)?.capacity / j as f64)
    };

    if ns == 1 {
        let q = Dist::point_mass(1, 0);
        let value = objective(&q)?;
        return Ok(UpperBound {
            value,
            j,
            q,
            certified: true,
            evaluations,
        });
    }

    if ns == 2 {
        let f = |q1: f64| -> Result<f64> { objective(&Dist::new(vec![1.0 - q1, q1])?) };
        let (q1, value) = golden_min(f, 0.0, 1.0, 1e-6)?;
        // Boundary states are candidates the interior search can only
        // approach asymptotically.
        let mut best = (q1, value);
        for endpoint in [0.0, 1.0] {
            let v = objective(&Dist::new(vec![1.0 - endpoint, endpoint])?)?;
            if v < best.1 {
                best = (endpoint, v);
            }
        }
        return Ok(UpperBound {
            value: best.1,
            j,
            q: Dist::new(vec![1.0 - best.0, best.0])?,
            certified: true,
            evaluations,
        });
    }

    // |S| ≥ 3: Nelder-Mead over the simplex with projection, multistart from
    // the vertices and the barycenter.
    let mut starts: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            let mut v = vec![0.0; ns];
            v[s] = 1.0;
            v
        })
        .collect();
    starts.push(vec![1.0 / ns as f64; ns]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut certified = true;
    for start in starts {
        let (point, value, converged) = nelder_mead_simplex(&mut objective, &start, 1e-5, 400)?;
        certified &= converged;
        if best.as_ref().is_none_or(|(_, bv)| value < *bv) {
            best = Some((point, value));
        }
    }
    let (point, value) = best.expect("at least one start");
    Ok(UpperBound {
        value,
        j,
        q: Dist::new(project_to_simplex(&point))?,
        certified,
        evaluations,
    })
}

fn guard_power(base: usize, exp: usize, what: &str) -> Result<()> {
    let size = (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
    if size > COMPOSITE_ALPHABET_GUARD as u128 {
        return Err(Error::GuardExceeded {
            what: what.into(),
            size,
            limit: COMPOSITE_ALPHABET_GUARD as u128,
        });
    }
    Ok(())
}

/// The `q`-averaged block channel `Σ_s q(s) · W_s^{⊗J} : X^J → Y^J`.
pub fn averaged_block_channel(avc: &Avc, j: usize, q: &Dist) -> Result<Channel> {
    if q.len() != avc.s_size() {
        return Err(Error::DimensionMismatch {
            what: "state distribution",
            expected: avc.s_size(),
            got: q.len(),
        });
    }
    guard_power(avc.x_size(), j, "|X|^J")?;
    guard_power(avc.y_size(), j, "|Y|^J")?;
    let nx = avc.x_size().pow(j as u32);
    let ny = avc.y_size().pow(j as u32);
    let mut rows = vec![vec![0.0; ny]; nx];
    for (s, &qs) in q.weights().iter().enumerate() {
        if qs == 0.0 {
            continue;
        }
        let mut power = avc.channel_for_state(s);
        for _ in 1..j {
            power = tensor_channels(&power, &avc.channel_for_state(s));
        }
        for (row, acc) in rows.iter_mut().enumerate() {
            for (y, a) in acc.iter_mut().enumerate() {
                *a += qs * power.prob(y, row);
            }
        }
    }
    Channel::from_rows(rows)
}

fn golden_min<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (x, neg) = golden_max(|t| f(t).map(|v| -v), a, b, tol)?;
    Ok((x, -neg))
}

/// Nelder-Mead on `R^n` where every evaluation first projects onto the
/// probability simplex. Stops when the value spread falls below `tol`.
fn nelder_mead_simplex<F>(
    f: &mut F,
    start: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, f64, bool)>
where
    F: FnMut(&Dist) -> Result<f64>,
{
    let n = start.len();
    let eval = |f: &mut F, point: &[f64]| -> Result<f64> {
        f(&Dist::new(project_to_simplex(point))?)
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += 0.15;
        simplex.push(p);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for p in &simplex {
        values.push(eval(f, p)?);
    }

    let mut converged = false;
    for _ in 0..max_iterations {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if values[worst] - values[best] < tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, &x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(&c, &w)| 2.0 * c - w)
            .collect();
        let fr = eval(f, &reflect)?;
        if fr < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| 3.0 * c - 2.0 * w)
                .collect();
            let fe = eval(f, &expand)?;
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| 0.5 * (c + w))
                .collect();
            let fc = eval(f, &contract)?;
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                let best_point = simplex[best].clone();
                for (i, point) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, &b) in point.iter_mut().zip(&best_point) {
                        *x = 0.5 * (*x + b);
                    }
                    values[i] = eval(f, point)?;
                }
            }
        }
    }
    let mut best_idx = 0;
    for i in 1..values.len() {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    Ok((
        project_to_simplex(&simplex[best_idx]),
        values[best_idx],
        converged,
    ))
}

/// Lower and upper capacity bounds with their witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub j: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub symmetrizable: bool,
    /// The lower-bound construction requires pairwise-distinct conditional
    /// outputs; when that fails the lower bound is reported as zero.
    pub lower_hypothesis_violated: bool,
    pub hypothesis_detail: Option<String>,
    pub quantizer_used: Option<Channel>,
    pub adversarial_t: Option<Channel>,
    pub adversarial_q: Dist,
    pub diagnostics: BracketDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketDiagnostics {
    pub lower_certified: bool,
    pub upper_certified: bool,
    pub upper_evaluations: usize,
    pub gap: f64,
    pub search: Option<SearchDiagnostics>,
}

/// Joins the block lower and upper bounds into one report, checking the
/// ordering invariant.
pub fn bracket(avc: &Avc, j: usize) -> Result<BoundReport> {
    let upper = block_upper_bound(avc, j)?;
    let (lower_value, lower_details, hypothesis_detail) = match block_lower_bound(avc, j) {
        Ok(lb) => (lb.value, Some(lb.details), None),
        Err(Error::HypothesisViolation(detail)) => (0.0, None, Some(detail)),
        Err(e) => return Err(e),
    };
    if lower_value > upper.value + 1e-6 {
        return Err(Error::Internal(format!(
            "bound ordering violated: lower {lower_value} > upper {}",
            upper.value
        )));
    }
    let max_rate = (avc.x_size() as f64).log2();
    if upper.value > max_rate + 1e-9 {
        return Err(Error::Internal(format!(
            "upper bound {} exceeds log2|X| = {max_rate}",
            upper.value
        )));
    }
    let symmetrizable = lower_details.as_ref().map(|d| d.symmetrizable).unwrap_or(false);
    Ok(BoundReport {
        j,
        lower_bound: lower_value,
        upper_bound: upper.value,
        symmetrizable,
        lower_hypothesis_violated: hypothesis_detail.is_some(),
        hypothesis_detail,
        quantizer_used: lower_details.as_ref().and_then(|d| d.quantizer.clone()),
        adversarial_t: lower_details.as_ref().and_then(|d| d.adversarial_t.clone()),
        adversarial_q: upper.q,
        diagnostics: BracketDiagnostics {
            lower_certified: lower_details.as_ref().map(|d| d.certified).unwrap_or(true),
            upper_certified: upper.certified,
            upper_evaluations: upper.evaluations,
            gap: upper.value - lower_value,
            search: lower_details.and_then(|d| d.search),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::two_state_bsc;
    use crate::prob::entropy;

    fn binary_entropy(p: f64) -> f64 {
        entropy(&Dist::new(vec![p, 1.0 - p]).unwrap())
    }

    #[test]
    fn capacity_of_identity() {
        let r = dmc_capacity(&Channel::identity(2)).unwrap();
        assert!((r.capacity - 1.0).abs() < 1e-5);
        assert!((r.input.get(0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn capacity_of_constant_channel_is_zero() {
        let w = Channel::from_rows(vec![vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        assert!(dmc_capacity(&w).unwrap().capacity < 1e-9);
    }

    #[test]
    fn capacity_of_bsc_matches_analytic() {
        // 1 − H(ε) for the binary symmetric channel.
        let r = dmc_capacity(&Channel::bsc(0.1).unwrap()).unwrap();
        assert!((r.capacity - (1.0 - binary_entropy(0.9))).abs() < 1e-3);
        assert!((r.capacity - 0.5310).abs() < 1e-3);
    }

    #[test]
    fn r_max_state_independent_identity() {
        // |S| = 1 and W = Id: the minimization is trivial.
        let avc = Avc::clean(2, 1);
        let r = r_max_binary(&avc).unwrap();
        assert!((r.value - 1.0).abs() < 1e-5);
        assert!(r.certified);
    }

    #[test]
    fn r_max_xor_is_zero() {
        let r = r_max_binary(&Avc::xor()).unwrap();
        assert!(r.value < 1e-6, "value {}", r.value);
    }

    #[test]
    fn r_max_state_independent_bsc() {
        // Both states behave identically, so the min over T is vacuous and
        // the value equals the channel capacity.
        let avc = Avc::from_channels(&[Channel::bsc(0.1).unwrap(), Channel::bsc(0.1).unwrap()])
            .unwrap();
        let r = r_max_binary(&avc).unwrap();
        assert!((r.value - 0.5310).abs() < 1e-3, "value {}", r.value);
    }

    #[test]
    fn r_max_rejects_wide_output() {
        let avc = Avc::clean(3, 1);
        assert!(r_max_binary(&avc).is_err());
    }

    #[test]
    fn lower_bound_xor_flags_symmetrizable() {
        let lb = lower_bound_unrestricted(&Avc::xor()).unwrap();
        assert_eq!(lb.value, 0.0);
        assert!(lb.symmetrizable);
        assert!(lb.quantizer.is_none());
    }

    #[test]
    fn lower_bound_clean_binary_is_one_bit() {
        let lb = lower_bound_unrestricted(&Avc::clean(2, 2)).unwrap();
        assert!((lb.value - 1.0).abs() < 1e-5, "value {}", lb.value);
        assert!(!lb.symmetrizable);
    }

    #[test]
    fn lower_bound_deterministic_avc_reaches_one_bit() {
        let avc = Avc::from_tensor(vec![
            vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]],
            vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
        ])
        .unwrap();
        let lb = lower_bound_unrestricted(&avc).unwrap();
        assert!((lb.value - 1.0).abs() < 1e-5, "value {}", lb.value);
    }

    #[test]
    fn block_lower_bound_rejects_xor_columns() {
        assert!(matches!(
            block_lower_bound(&Avc::xor(), 2),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn block_lower_bound_clean_single_state() {
        let avc = Avc::clean(2, 1);
        let lb = block_lower_bound(&avc, 1).unwrap();
        assert!((lb.value - 1.0).abs() < 1e-5);
    }

    #[test]
    fn upper_bound_single_state_equals_capacity() {
        let avc = Avc::from_channels(&[Channel::bsc(0.1).unwrap()]).unwrap();
        let ub = block_upper_bound(&avc, 1).unwrap();
        let cap = dmc_capacity(&Channel::bsc(0.1).unwrap()).unwrap().capacity;
        assert!((ub.value - cap).abs() < 1e-9);
    }

    #[test]
    fn upper_bound_xor_is_zero_at_uniform() {
        let ub = block_upper_bound(&Avc::xor(), 1).unwrap();
        assert!(ub.value < 1e-6, "value {}", ub.value);
        assert!((ub.q.get(0) - 0.5).abs() < 0.05);
    }

    #[test]
    fn upper_bound_three_state_bsc_minimizes_over_simplex() {
        // Mixture crossovers live in [0.1, 0.45]; capacity falls with the
        // crossover up to one half, so the worst jamming is the 0.45 vertex.
        let avc = Avc::from_channels(&[
            Channel::bsc(0.1).unwrap(),
            Channel::bsc(0.2).unwrap(),
            Channel::bsc(0.45).unwrap(),
        ])
        .unwrap();
        let ub = block_upper_bound(&avc, 1).unwrap();
        let expect = 1.0 - binary_entropy(0.45);
        assert!((ub.value - expect).abs() < 1e-3, "value {}", ub.value);
        assert!(ub.q.get(2) > 0.95, "q = {:?}", ub.q.weights());
    }

    #[test]
    fn upper_bound_two_state_bsc_picks_worse_state() {
        // Scan oracle: capacity of BSC(0.1(1−q) + 0.3q) is minimized at
        // q = 1, value 1 − H(0.3).
        let avc = two_state_bsc(0.1, 0.3).unwrap();
        let ub = block_upper_bound(&avc, 1).unwrap();
        let expect = 1.0 - binary_entropy(0.3);
        assert!((ub.value - expect).abs() < 1e-3, "value {}", ub.value);
        assert!((ub.value - 0.1187).abs() < 1e-3);
        assert!(ub.q.get(1) > 0.99);
    }

    #[test]
    fn bracket_clean_avc_is_tight_at_one_bit() {
        let report = bracket(&Avc::clean(2, 1), 1).unwrap();
        assert!((report.lower_bound - 1.0).abs() < 1e-4);
        assert!((report.upper_bound - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bracket_clean_two_state_avc_flags_duplicate_columns() {
        // Both states share the identity channel, so the repetition
        // construction's distinct-columns hypothesis fails; the upper bound
        // is still tight.
        let report = bracket(&Avc::clean(2, 2), 1).unwrap();
        assert!(report.lower_hypothesis_violated);
        assert!((report.upper_bound - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bracket_xor_reports_zero_upper_and_flagged_lower() {
        let report = bracket(&Avc::xor(), 1).unwrap();
        assert!(report.lower_hypothesis_violated);
        assert_eq!(report.lower_bound, 0.0);
        assert!(report.upper_bound < 1e-6);
    }

    #[test]
    fn bracket_two_state_bsc_orders_bounds() {
        let avc = two_state_bsc(0.1, 0.3).unwrap();
        let report = bracket(&avc, 2).unwrap();
        assert!(report.lower_bound <= report.upper_bound + 1e-6);
        assert!(report.lower_bound > 0.0);
        assert!(report.upper_bound < 1.0);
    }

    #[test]
    fn simplex_projection_basics() {
        let p = project_to_simplex(&[0.5, 0.5]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        let p = project_to_simplex(&[2.0, -1.0]);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
        let p = project_to_simplex(&[0.1, 0.2, 0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
