//! Constructive reduction of two disjoint convex hulls on a simplex down to
//! the binary simplex, preserving disjointness at every stage, and the search
//! for the best binary output quantizer.
//!
//! Each stage shrinks the simplex toward its barycenter (so that a subsequent
//! rotation cannot leave it), rotates a separating hyperplane onto the last
//! vertex, and projects that vertex onto an interior point of the opposite
//! face. Disjointness of the image hulls is re-verified by LP after every
//! stage; a verification failure is an error, never a silent wrong answer.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Avc, Channel};
use crate::error::{Error, Result};
use crate::feasibility::{hulls_intersect, separating_hyperplane, HullPair, Intersection};
use crate::prob::{t_max, t_min, Dist};
use crate::symmetrizability::{is_max_error_symmetrizable, MaxSymWitness};

/// Deterministic quantizer enumeration is refused above this output size.
pub const ENUMERATION_GUARD: usize = 22;

/// A linear map between simplices, stored column-wise: `columns[i]` is the
/// image of the `i`-th vertex and must itself be a distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexMap {
    columns: Vec<Vec<f64>>,
}

impl SimplexMap {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidInput("simplex map with no columns".into()));
        }
        let target = columns[0].len();
        for (i, col) in columns.iter().enumerate() {
            if col.len() != target {
                return Err(Error::DimensionMismatch {
                    what: "simplex map column",
                    expected: target,
                    got: col.len(),
                });
            }
            Dist::new(col.clone()).map_err(|e| Error::InvalidDist {
                reason: format!("column {i}: {e}"),
            })?;
        }
        Ok(Self { columns })
    }

    pub fn identity(d: usize) -> Self {
        let columns = (0..d)
            .map(|i| {
                let mut col = vec![0.0; d];
                col[i] = 1.0;
                col
            })
            .collect();
        Self { columns }
    }

    pub fn source_dim(&self) -> usize {
        self.columns.len()
    }

    pub fn target_dim(&self) -> usize {
        self.columns[0].len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Applies the map: `x ↦ Σ_i x_i · columns[i]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target_dim()];
        for (col, &xi) in self.columns.iter().zip(x) {
            if xi == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(col) {
                *o += xi * v;
            }
        }
        out
    }

    /// Composition `self ∘ inner`.
    pub fn compose(&self, inner: &SimplexMap) -> Result<SimplexMap> {
        if inner.target_dim() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                what: "simplex map composition",
                expected: self.source_dim(),
                got: inner.target_dim(),
            });
        }
        SimplexMap::new(
            inner
                .columns
                .iter()
                .map(|col| sanitize_point(self.apply(col)))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// A hyperplane `{x : normalᵀx = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
            return Err(Error::InvalidInput("hyperplane with zero normal".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn side(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

/// An orthogonal map on `R^d` fixing the all-ones vector.
#[derive(Debug, Clone, Serialize)]
pub struct Rotation {
    matrix: Vec<Vec<f64>>,
}

impl Rotation {
    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| dot(row, x)).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }
}

/// Shrink factor `t_min(d) / t_max(d) = 1 / (d − 1)` toward the barycenter,
/// under which the simplex stays inside its own inradius ball.
pub fn shrink_lambda(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "simplex needs at least 2 outcomes, got {d}"
        )));
    }
    Ok(t_min(d) / t_max(d))
}

/// The affine contraction `x ↦ λ(d)(x − π) + π` expressed column-wise as a
/// stochastic map.
pub fn shrink_map(d: usize) -> Result<SimplexMap> {
    let lambda = shrink_lambda(d)?;
    let off = (1.0 - lambda) / d as f64;
    let columns = (0..d)
        .map(|i| {
            let mut col = vec![off; d];
            col[i] += lambda;
            col
        })
        .collect();
    SimplexMap::new(columns)
}

/// Builds an orthogonal map that fixes the all-ones vector and rotates the
/// hyperplane so its transformed normal `ṽ = Ov` satisfies `ṽ_{d−1} = c`,
/// putting the last vertex of the simplex on the rotated hyperplane. The
/// construction is verified post-hoc (orthogonality and the fixed vector to
/// `1e-10`, alignment to `1e-8`).
pub fn fixing_rotation(h: &Hyperplane) -> Result<Rotation> {
    let d = h.dim();
    let v = &h.normal;
    let c = h.offset;
    if d < 2 {
        return Err(Error::InvalidInput("rotation needs dimension ≥ 2".into()));
    }

    let mean = v.iter().sum::<f64>() / d as f64;
    let v_perp: Vec<f64> = v.iter().map(|&vi| vi - mean).collect();
    let np = norm(&v_perp);
    if np < 1e-12 {
        return Err(Error::InvalidInput(
            "hyperplane normal is parallel to the all-ones vector".into(),
        ));
    }

    let scale = np.max(c.abs()).max(1.0);
    let rotation = if (v[d - 1] - c).abs() <= 1e-13 * scale {
        // Already aligned.
        identity_matrix(d)
    } else {
        // Target normal w in the complement of 1 with w_{d−1} = γ and
        // ‖w‖ = ‖v_perp‖; exists whenever |γ|/‖v_perp‖ ≤ t_max(d).
        let gamma = c - mean;
        let a_coef = gamma * d as f64 / (d as f64 - 1.0);
        let g: Vec<f64> = (0..d)
            .map(|i| if i == d - 1 { 1.0 - 1.0 / d as f64 } else { -1.0 / d as f64 })
            .collect();
        let g_sq = (d as f64 - 1.0) / d as f64;
        let mut h_sq = np * np - a_coef * a_coef * g_sq;
        if h_sq < 0.0 {
            if h_sq < -1e-9 * np * np {
                return Err(Error::InvalidInput(format!(
                    "hyperplane cannot be aligned with the last vertex: \
                     offset-to-normal ratio {:.3e} exceeds t_max({d}) = {:.3e}",
                    gamma.abs() / np,
                    t_max(d)
                )));
            }
            h_sq = 0.0;
        }
        let mut w: Vec<f64> = g.iter().map(|&gi| a_coef * gi).collect();
        if h_sq > 0.0 {
            let extra = orthogonal_direction(&[ones_unit(d), normalize(&g)], d)?;
            let h_len = h_sq.sqrt();
            for (wi, &ei) in w.iter_mut().zip(&extra) {
                *wi += h_len * ei;
            }
        }
        rotation_between(&normalize(&v_perp), &normalize(&w), d)?
    };

    let rot = Rotation { matrix: rotation };
    verify_rotation(&rot, h)?;
    Ok(rot)
}

fn verify_rotation(rot: &Rotation, h: &Hyperplane) -> Result<()> {
    let d = rot.dim();
    let ones = vec![1.0; d];
    let fixed = rot.apply(&ones);
    if fixed
        .iter()
        .zip(&ones)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        > 1e-10
    {
        return Err(Error::Internal("rotation does not fix the all-ones vector".into()));
    }
    for i in 0..d {
        for j in i..d {
            let prod: f64 = (0..d).map(|k| rot.matrix[k][i] * rot.matrix[k][j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (prod - expect).abs() > 1e-10 {
                return Err(Error::Internal("rotation is not orthogonal".into()));
            }
        }
    }
    let aligned = rot.apply(&h.normal);
    let scale = norm(&h.normal).max(h.offset.abs()).max(1.0);
    if (aligned[d - 1] - h.offset).abs() > 1e-8 * scale {
        return Err(Error::Internal(format!(
            "rotated normal misses the alignment target by {:.3e}",
            aligned[d - 1] - h.offset
        )));
    }
    Ok(())
}

/// The projection `V : R^d → R^{d−1}` fixing the first `d−1` vertices and
/// sending the last vertex to the interior face point `p`, which must lie on
/// the hyperplane. Points strictly on one side of the hyperplane stay
/// strictly on that side of the truncated hyperplane.
pub fn disjoint_projection(h: &Hyperplane, p: &[f64]) -> Result<SimplexMap> {
    let d = h.dim();
    if d < 2 {
        return Err(Error::InvalidInput("projection needs dimension ≥ 2".into()));
    }
    if p.len() != d - 1 {
        return Err(Error::DimensionMismatch {
            what: "projection target",
            expected: d - 1,
            got: p.len(),
        });
    }
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "projection target coordinate {i} is not strictly positive: {pi}"
            )));
        }
    }
    let scale = norm(&h.normal).max(h.offset.abs()).max(1.0);
    if (h.normal[d - 1] - h.offset).abs() > 1e-8 * scale {
        return Err(Error::InvalidInput(
            "hyperplane does not pass through the last vertex".into(),
        ));
    }
    let on_plane: f64 = dot(&h.normal[..d - 1], p) - h.offset;
    if on_plane.abs() > 1e-5 * scale {
        return Err(Error::InvalidInput(format!(
            "projection target is off the hyperplane by {on_plane:.3e}"
        )));
    }
    let mut columns: Vec<Vec<f64>> = (0..d - 1)
        .map(|i| {
            let mut col = vec![0.0; d - 1];
            col[i] = 1.0;
            col
        })
        .collect();
    columns.push(p.to_vec());
    SimplexMap::new(columns)
}

/// One stage of the reduction pipeline, recorded for the proof trace.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionStage {
    /// Outcome count before this stage.
    pub dim: usize,
    pub lambda: f64,
    pub pre_rotation_normal: Vec<f64>,
    pub rotation: Vec<Vec<f64>>,
    /// The rotated hyperplane through the last vertex.
    pub hyperplane: Hyperplane,
    /// Interior face point the last vertex is projected onto.
    pub projection_target: Vec<f64>,
    /// Final 3-to-2-outcome step, beyond the stated stage range.
    pub extension: bool,
    /// Stage disjointness verification landed in the marginal band.
    pub marginal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTrace {
    pub stages: Vec<ReductionStage>,
}

/// Reduces two disjoint hulls on a `d`-outcome simplex to the binary simplex
/// through per-stage shrink/rotate/project maps, verifying disjointness of
/// the images after every stage.
pub fn reduce_to_binary(
    points_a: &[Vec<f64>],
    points_b: &[Vec<f64>],
) -> Result<(SimplexMap, ReductionTrace)> {
    let pair = HullPair::new(points_a.to_vec(), points_b.to_vec())?;
    if !hulls_intersect(&pair)?.is_disjoint() {
        return Err(Error::InvalidInput(
            "input hulls intersect; nothing to preserve".into(),
        ));
    }
    let d0 = pair.dim();
    let mut total = SimplexMap::identity(d0);
    let mut trace = ReductionTrace { stages: Vec::new() };
    if d0 == 2 {
        return Ok((total, trace));
    }

    let mut cur_a = points_a.to_vec();
    let mut cur_b = points_b.to_vec();
    let mut stage_idx = 0;
    while cur_a[0].len() > 2 {
        let d = cur_a[0].len();
        let lambda = shrink_lambda(d)?;
        let shrink = shrink_map(d)?;
        let shrunk_a: Vec<Vec<f64>> = cur_a.iter().map(|p| shrink.apply(p)).collect();
        let shrunk_b: Vec<Vec<f64>> = cur_b.iter().map(|p| shrink.apply(p)).collect();

        let (normal, offset) =
            separating_hyperplane(&HullPair::new(shrunk_a.clone(), shrunk_b.clone())?).map_err(
                |e| Error::StageVerification {
                    stage: stage_idx,
                    detail: format!("no separating hyperplane after shrinking: {e}"),
                },
            )?;
        let pre = Hyperplane::new(normal.clone(), offset)?;
        let rotation = fixing_rotation(&pre).map_err(|e| Error::StageVerification {
            stage: stage_idx,
            detail: format!("rotation construction failed: {e}"),
        })?;
        let aligned = Hyperplane::new(rotation.apply(&normal), offset)?;

        let target = projection_target(&aligned).map_err(|e| Error::StageVerification {
            stage: stage_idx,
            detail: format!("projection target selection failed: {e}"),
        })?;
        let projection = disjoint_projection(&aligned, &target)?;

        let rotated_a: Vec<Vec<f64>> = shrunk_a.iter().map(|p| rotation.apply(p)).collect();
        let rotated_b: Vec<Vec<f64>> = shrunk_b.iter().map(|p| rotation.apply(p)).collect();
        let next_a: Vec<Vec<f64>> = rotated_a
            .iter()
            .map(|p| sanitize_point(projection.apply(p)))
            .collect::<Result<_>>()?;
        let next_b: Vec<Vec<f64>> = rotated_b
            .iter()
            .map(|p| sanitize_point(projection.apply(p)))
            .collect::<Result<_>>()?;

        let verdict = hulls_intersect(&HullPair::new(next_a.clone(), next_b.clone())?)?;
        let marginal = match verdict {
            Intersection::Disjoint { marginal } => marginal,
            Intersection::Intersects(_) => {
                return Err(Error::StageVerification {
                    stage: stage_idx,
                    detail: format!("image hulls intersect after projecting from {d} outcomes"),
                });
            }
        };

        // Stage map V ∘ O ∘ N as a single stochastic map.
        let stage_columns = (0..d)
            .map(|k| {
                let shrunk = shrink.columns()[k].clone();
                sanitize_point(projection.apply(&rotation.apply(&shrunk)))
            })
            .collect::<Result<Vec<_>>>()?;
        let stage_map = SimplexMap::new(stage_columns).map_err(|e| Error::StageVerification {
            stage: stage_idx,
            detail: format!("stage map left the simplex: {e}"),
        })?;
        total = stage_map.compose(&total)?;

        trace.stages.push(ReductionStage {
            dim: d,
            lambda,
            pre_rotation_normal: normal,
            rotation: rotation.matrix().to_vec(),
            hyperplane: aligned,
            projection_target: target,
            extension: d == 3,
            marginal,
        });

        cur_a = next_a;
        cur_b = next_b;
        stage_idx += 1;
    }

    // The composed map must reproduce the per-stage images.
    for (orig, reduced) in points_a.iter().zip(&cur_a) {
        let via_total = total.apply(orig);
        if via_total
            .iter()
            .zip(reduced)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            > 1e-9
        {
            return Err(Error::Internal(
                "composed reduction disagrees with staged images".into(),
            ));
        }
    }
    Ok((total, trace))
}

/// Picks the interior face point the last vertex projects onto: the mean of
/// the crossings of the rotated hyperplane with the edges of the retained
/// face, pushed inward when it touches the face boundary.
fn projection_target(h: &Hyperplane) -> Result<Vec<f64>> {
    let d = h.dim();
    let v = &h.normal;
    let c = h.offset;
    let scale = norm(v).max(c.abs()).max(1.0);
    let mut crossings: Vec<Vec<f64>> = Vec::new();
    for i in 0..d - 1 {
        if (v[i] - c).abs() <= 1e-12 * scale {
            let mut p = vec![0.0; d - 1];
            p[i] = 1.0;
            crossings.push(p);
        }
    }
    for i in 0..d - 1 {
        for j in i + 1..d - 1 {
            let denom = v[j] - v[i];
            if denom.abs() <= 1e-14 * scale {
                continue;
            }
            let t = (c - v[i]) / denom;
            if t > 1e-12 && t < 1.0 - 1e-12 {
                let mut p = vec![0.0; d - 1];
                p[i] = 1.0 - t;
                p[j] = t;
                crossings.push(p);
            }
        }
    }
    if crossings.is_empty() {
        return Err(Error::InvalidInput(
            "hyperplane misses the retained face".into(),
        ));
    }
    let mut mean = vec![0.0; d - 1];
    for p in &crossings {
        for (m, &pi) in mean.iter_mut().zip(p) {
            *m += pi / crossings.len() as f64;
        }
    }
    let min = mean.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 1e-9 {
        // Touches the face boundary; nudge toward the face barycenter.
        let push = 1e-6;
        let bary = 1.0 / (d - 1) as f64;
        for m in mean.iter_mut() {
            *m = (1.0 - push) * *m + push * bary;
        }
    }
    Ok(mean)
}

/// Wraps a binary-target simplex map as an output quantizer: row `y` of the
/// quantizer is column `y` of the map, so pushing an output distribution
/// through the quantizer equals applying the map.
pub fn quantizer_from_map(map: &SimplexMap) -> Result<Channel> {
    if map.target_dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "quantizer map must target 2 outcomes, has {}",
            map.target_dim()
        )));
    }
    Channel::from_rows(map.columns().to_vec())
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchDiagnostics {
    pub deterministic_candidates: usize,
    pub evaluations: usize,
    /// Trace of the geometric construction when it was built and evaluated.
    pub reduction_trace: Option<ReductionTrace>,
    /// Why the geometric candidate was skipped, when it was.
    pub reduction_skipped: Option<String>,
    pub refinement_gain: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantizerSearch {
    pub quantizer: Channel,
    pub value: f64,
    pub diagnostics: SearchDiagnostics,
}

/// Finds the best binary output quantizer for `avc` under `evaluator`.
///
/// Candidates: all deterministic binary quantizers up to complementation,
/// the hull-reduction quantizer when the AVC is non-symmetrizable, and a
/// local coordinate-ascent refinement seeded from the best of those. The
/// refinement exists because the objective is not linear in the quantizer,
/// so an interior maximum is possible; no global optimality is claimed.
///
/// Enumeration is refused above [`ENUMERATION_GUARD`] output letters; use
/// [`best_binary_quantizer_seeded`] there.
pub fn best_binary_quantizer<F>(avc: &Avc, evaluator: F) -> Result<QuantizerSearch>
where
    F: Fn(&Channel) -> Result<f64> + Sync,
{
    let y = avc.y_size();
    if y > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            what: "deterministic quantizer enumeration over |Y|".into(),
            size: y as u128,
            limit: ENUMERATION_GUARD as u128,
        });
    }
    let mut candidates: Vec<Channel> = Vec::new();
    if y == 1 {
        candidates.push(Channel::from_rows(vec![vec![1.0, 0.0]])?);
    } else {
        // Subsets of Y containing letter 0, proper: 2^{|Y|-1} − 1 of them.
        for mask in 0..(1usize << (y - 1)) {
            let full = (mask << 1) | 1;
            if full == (1 << y) - 1 {
                continue;
            }
            let rows = (0..y)
                .map(|letter| {
                    if full & (1 << letter) != 0 {
                        vec![1.0, 0.0]
                    } else {
                        vec![0.0, 1.0]
                    }
                })
                .collect();
            candidates.push(Channel::from_rows(rows)?);
        }
    }
    search_over(avc, evaluator, candidates)
}

/// Quantizer search without deterministic enumeration, for output alphabets
/// too large to enumerate: candidates are the supplied seed, the
/// hull-reduction quantizer when available, and the local refinement.
pub fn best_binary_quantizer_seeded<F>(
    avc: &Avc,
    evaluator: F,
    seed: &Channel,
) -> Result<QuantizerSearch>
where
    F: Fn(&Channel) -> Result<f64> + Sync,
{
    if seed.input_size() != avc.y_size() || seed.output_size() != 2 {
        return Err(Error::DimensionMismatch {
            what: "seed quantizer",
            expected: avc.y_size() * 2,
            got: seed.input_size() * seed.output_size(),
        });
    }
    search_over(avc, evaluator, vec![seed.clone()])
}

fn search_over<F>(avc: &Avc, evaluator: F, mut candidates: Vec<Channel>) -> Result<QuantizerSearch>
where
    F: Fn(&Channel) -> Result<f64> + Sync,
{
    let y = avc.y_size();
    let deterministic_candidates = candidates.len();

    let mut reduction_trace = None;
    let mut reduction_skipped = None;
    match is_max_error_symmetrizable(avc)? {
        verdict if !verdict.symmetrizable => match verdict.witness {
            MaxSymWitness::DisjointPair { x, x_prime } => {
                let a: Vec<Vec<f64>> = (0..avc.s_size()).map(|s| avc.row(x, s).to_vec()).collect();
                let b: Vec<Vec<f64>> = (0..avc.s_size())
                    .map(|s| avc.row(x_prime, s).to_vec())
                    .collect();
                match reduce_to_binary(&a, &b) {
                    Ok((map, trace)) => {
                        candidates.push(quantizer_from_map(&map)?);
                        reduction_trace = Some(trace);
                    }
                    Err(e) => reduction_skipped = Some(e.to_string()),
                }
            }
            _ => reduction_skipped = Some("no disjoint input pair available".into()),
        },
        _ => reduction_skipped = Some("AVC is symmetrizable".into()),
    }

    let scored: Vec<(usize, f64)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, q)| evaluator(q).map(|v| (i, v)))
        .collect::<Result<_>>()?;
    let mut evaluations = scored.len();
    let (mut best_idx, mut best_value) = (0usize, f64::NEG_INFINITY);
    for &(i, v) in &scored {
        if v > best_value + 1e-15 {
            best_idx = i;
            best_value = v;
        }
    }
    let mut best_quantizer = candidates[best_idx].clone();

    // Coordinate ascent on the q(0|y) entries, step halving.
    let before_refinement = best_value;
    let mut zero_probs: Vec<f64> = (0..y).map(|letter| best_quantizer.prob(0, letter)).collect();
    let mut step = 0.25;
    while step >= 1e-4 {
        loop {
            let mut improved = false;
            for letter in 0..y {
                for dir in [1.0, -1.0] {
                    let proposal = (zero_probs[letter] + dir * step).clamp(0.0, 1.0);
                    if (proposal - zero_probs[letter]).abs() < 1e-12 {
                        continue;
                    }
                    let mut trial = zero_probs.clone();
                    trial[letter] = proposal;
                    let q = binary_quantizer_from_probs(&trial)?;
                    let v = evaluator(&q)?;
                    evaluations += 1;
                    if v > best_value + 1e-6 {
                        best_value = v;
                        zero_probs = trial;
                        best_quantizer = q;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }

    Ok(QuantizerSearch {
        quantizer: best_quantizer,
        value: best_value,
        diagnostics: SearchDiagnostics {
            deterministic_candidates,
            evaluations,
            reduction_trace,
            reduction_skipped,
            refinement_gain: best_value - before_refinement,
        },
    })
}

fn binary_quantizer_from_probs(zero_probs: &[f64]) -> Result<Channel> {
    Channel::from_rows(
        zero_probs
            .iter()
            .map(|&p| vec![p, 1.0 - p])
            .collect(),
    )
}

fn sanitize_point(mut p: Vec<f64>) -> Result<Vec<f64>> {
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 {
                return Err(Error::Internal(format!(
                    "pipeline produced a significantly negative coordinate: {v:.3e}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(p)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|&x| x / n).collect()
}

fn ones_unit(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}

fn identity_matrix(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// A unit vector orthogonal to all of `span` (each assumed unit length and
/// mutually orthogonal), chosen deterministically.
fn orthogonal_direction(span: &[Vec<f64>], d: usize) -> Result<Vec<f64>> {
    for k in 0..d {
        let mut cand = vec![0.0; d];
        cand[k] = 1.0;
        for basis in span {
            let proj = dot(&cand, basis);
            for (c, &b) in cand.iter_mut().zip(basis) {
                *c -= proj * b;
            }
        }
        let n = norm(&cand);
        if n > 1e-6 {
            return Ok(cand.iter().map(|&x| x / n).collect());
        }
    }
    Err(Error::Internal(
        "no direction orthogonal to the span found".into(),
    ))
}

/// In-plane rotation taking unit vector `a` to unit vector `b`, acting as the
/// identity on the orthogonal complement of their span.
fn rotation_between(a: &[f64], b: &[f64], d: usize) -> Result<Vec<Vec<f64>>> {
    let cos = dot(a, b).clamp(-1.0, 1.0);
    if cos > 1.0 - 1e-14 {
        return Ok(identity_matrix(d));
    }
    let (axis2, sin) = if cos < -1.0 + 1e-12 {
        // b ≈ −a: rotate by π in a plane containing a; the second axis only
        // needs to avoid the all-ones direction, which both a and b already do.
        let axis2 = orthogonal_direction(&[ones_unit(d), a.to_vec()], d)?;
        (axis2, 0.0)
    } else {
        let mut residual: Vec<f64> = b.iter().zip(a).map(|(&bi, &ai)| bi - cos * ai).collect();
        let rn = norm(&residual);
        for r in residual.iter_mut() {
            *r /= rn;
        }
        (residual, rn)
    };
    let mut m = identity_matrix(d);
    for i in 0..d {
        for j in 0..d {
            m[i][j] += (cos - 1.0) * (a[i] * a[j] + axis2[i] * axis2[j])
                + sin * (axis2[i] * a[j] - a[i] * axis2[j]);
        }
    }
    Ok(m)
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
    fn shrink_lambda_closed_form() {
        assert!((shrink_lambda(2).unwrap() - 1.0).abs() < 1e-15);
        assert!((shrink_lambda(3).unwrap() - 0.5).abs() < 1e-15);
        assert!((shrink_lambda(5).unwrap() - 0.25).abs() < 1e-15);
        assert!(shrink_lambda(1).is_err());
    }

    #[test]
    fn shrink_map_on_vertex() {
        let n = shrink_map(3).unwrap();
        let got = n.apply(&delta(3, 0));
        let expect = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn shrink_map_fixes_barycenter() {
        let n = shrink_map(4).unwrap();
        let pi = vec![0.25; 4];
        let got = n.apply(&pi);
        for (g, e) in got.iter().zip(&pi) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn shrink_map_d2_is_identity() {
        assert_eq!(shrink_map(2).unwrap(), SimplexMap::identity(2));
    }

    #[test]
    fn fixing_rotation_accepts_aligned_normal() {
        // v_{d−1} = c already.
        let h = Hyperplane::new(vec![1.0, 0.0, 0.3], 0.3).unwrap();
        let rot = fixing_rotation(&h).unwrap();
        for (i, row) in rot.matrix().iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn fixing_rotation_aligns_and_is_orthogonal() {
        let h = Hyperplane::new(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        let rot = fixing_rotation(&h).unwrap();
        let ones = vec![1.0, 1.0, 1.0];
        let fixed = rot.apply(&ones);
        for (f, o) in fixed.iter().zip(&ones) {
            assert!((f - o).abs() < 1e-10);
        }
        let aligned = rot.apply(&h.normal);
        assert!(aligned[2].abs() < 1e-8);
    }

    #[test]
    fn fixing_rotation_preserves_distances() {
        let h = Hyperplane::new(vec![0.7, -0.2, 0.1, 0.05], 0.12).unwrap();
        let rot = fixing_rotation(&h).unwrap();
        let p = vec![0.4, 0.3, 0.2, 0.1];
        let q = vec![0.1, 0.1, 0.3, 0.5];
        let (rp, rq) = (rot.apply(&p), rot.apply(&q));
        let before: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
        let after: f64 = rp.iter().zip(&rq).map(|(a, b)| (a - b).powi(2)).sum();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn fixing_rotation_rejects_ones_normal() {
        let h = Hyperplane::new(vec![1.0, 1.0, 1.0], 1.0).unwrap();
        assert!(fixing_rotation(&h).is_err());
    }

    #[test]
    fn projection_reads_off_definition() {
        // d = 3, p = (0.5, 0.5): hyperplane through δ_2 with vᵀp = c.
        let h = Hyperplane::new(vec![0.1, -0.1, 0.0], 0.0).unwrap();
        let v = disjoint_projection(&h, &[0.5, 0.5]).unwrap();
        assert_eq!(v.apply(&delta(3, 2)), vec![0.5, 0.5]);
        assert_eq!(v.apply(&delta(3, 0)), vec![1.0, 0.0]);
    }

    #[test]
    fn projection_mixes_last_vertex() {
        let h = Hyperplane::new(vec![0.1, -0.1, 0.0], 0.0).unwrap();
        let v = disjoint_projection(&h, &[0.5, 0.5]).unwrap();
        let q = vec![0.5, 0.0, 0.5];
        let got = v.apply(&q);
        assert!((got[0] - 0.75).abs() < 1e-12);
        assert!((got[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn projection_rejects_boundary_target() {
        let h = Hyperplane::new(vec![0.1, 0.0, 0.1], 0.1).unwrap();
        assert!(disjoint_projection(&h, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn projection_preserves_sides() {
        let h = Hyperplane::new(vec![0.2, -0.2, 0.0], 0.0).unwrap();
        let p = [0.5, 0.5];
        let v = disjoint_projection(&h, &p).unwrap();
        let truncated = Hyperplane::new(h.normal[..2].to_vec(), h.offset).unwrap();
        let q_below = vec![0.1, 0.6, 0.3];
        let q_above = vec![0.6, 0.1, 0.3];
        assert!(h.side(&q_below) < 0.0);
        assert!(truncated.side(&v.apply(&q_below)) < 0.0);
        assert!(h.side(&q_above) > 0.0);
        assert!(truncated.side(&v.apply(&q_above)) > 0.0);
    }

    #[test]
    fn reduce_binary_inputs_is_identity() {
        let (map, trace) =
            reduce_to_binary(&[delta(2, 0)], &[delta(2, 1)]).unwrap();
        assert_eq!(map, SimplexMap::identity(2));
        assert!(trace.stages.is_empty());
    }

    #[test]
    fn reduce_rejects_intersecting_hulls() {
        assert!(reduce_to_binary(&[delta(2, 0)], &[delta(2, 0)]).is_err());
    }

    #[test]
    fn reduce_separated_vertices_in_three_outcomes() {
        let (map, trace) = reduce_to_binary(&[delta(3, 0)], &[delta(3, 1)]).unwrap();
        assert_eq!(trace.stages.len(), 1);
        assert!(trace.stages[0].extension);
        let a = map.apply(&delta(3, 0));
        let b = map.apply(&delta(3, 1));
        let pair = HullPair::new(vec![a], vec![b]).unwrap();
        assert!(hulls_intersect(&pair).unwrap().is_disjoint());
    }

    #[test]
    fn reduce_deterministic_avc_hulls() {
        // Hulls conv{δ0, δ1} and conv{δ2, δ3} in four outcomes.
        let a = vec![delta(4, 0), delta(4, 1)];
        let b = vec![delta(4, 2), delta(4, 3)];
        let (map, trace) = reduce_to_binary(&a, &b).unwrap();
        assert_eq!(trace.stages.len(), 2);
        let im_a: Vec<Vec<f64>> = a.iter().map(|p| map.apply(p)).collect();
        let im_b: Vec<Vec<f64>> = b.iter().map(|p| map.apply(p)).collect();
        let pair = HullPair::new(im_a, im_b).unwrap();
        assert!(hulls_intersect(&pair).unwrap().is_disjoint());
    }

    #[test]
    fn quantizer_from_identity_map() {
        let q = quantizer_from_map(&SimplexMap::identity(2)).unwrap();
        assert_eq!(q, Channel::identity(2));
    }

    #[test]
    fn quantizer_from_constant_map() {
        let map = SimplexMap::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let q = quantizer_from_map(&map).unwrap();
        assert_eq!(q.prob(0, 0), 1.0);
        assert_eq!(q.prob(0, 1), 1.0);
    }

    #[test]
    fn quantizer_rejects_wide_maps() {
        assert!(quantizer_from_map(&SimplexMap::identity(3)).is_err());
    }

    #[test]
    fn search_enumerates_binary_output() {
        // Evaluator scores the quantizer's distance from constant; identity
        // (or its complement) should win.
        let avc = Avc::xor();
        let search = best_binary_quantizer(&avc, |q: &Channel| {
            Ok((q.prob(0, 0) - q.prob(0, 1)).abs())
        })
        .unwrap();
        assert_eq!(search.diagnostics.deterministic_candidates, 1);
        assert!((search.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn search_refuses_large_alphabets() {
        let rows = vec![vec![1.0 / 23.0; 23]; 2];
        let avc23 = Avc::from_tensor(vec![rows]).unwrap();
        assert!(matches!(
            best_binary_quantizer(&avc23, |_| Ok(0.0)),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn seeded_search_covers_large_alphabets() {
        let rows = vec![vec![1.0 / 23.0; 23]; 2];
        let avc23 = Avc::from_tensor(vec![rows]).unwrap();
        let seed = Channel::from_rows(
            (0..23)
                .map(|letter| {
                    if letter < 12 {
                        vec![1.0, 0.0]
                    } else {
                        vec![0.0, 1.0]
                    }
                })
                .collect(),
        )
        .unwrap();
        // Score favors balanced splits; the refinement may only improve it.
        let balance = |q: &Channel| {
            let zero_mass: f64 = (0..23).map(|letter| q.prob(0, letter)).sum();
            Ok(1.0 - (zero_mass / 23.0 - 0.5).abs())
        };
        let seeded_score = balance(&seed).unwrap();
        let search = best_binary_quantizer_seeded(&avc23, balance, &seed).unwrap();
        assert!(search.value >= seeded_score);
        assert_eq!(search.diagnostics.deterministic_candidates, 1);
    }
}
