//! Finite-alphabet probability primitives: distributions over a finite set,
//! joint distributions over a product of two sets, entropy and mutual
//! information in bits, tensor products, partial traces and simplex geometry.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::channel::Channel;
use crate::error::{Error, Result};

/// Absolute tolerance on probability sums.
pub const SUM_TOL: f64 = 1e-9;
/// Entries of a distribution may dip this far below zero (round-off floor).
pub const ENTRY_FLOOR: f64 = -1e-12;

/// A probability vector over a finite alphabet; a point on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    weights: Vec<f64>,
}

impl Dist {
    /// Validates and wraps a weight vector. Inputs are never renormalized
    /// here; use [`Dist::normalized`] to request that explicitly.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        validate_simplex_point(&weights, "distribution")?;
        Ok(Self { weights })
    }

    /// Rescales `weights` to sum to one, then validates. Fails on negative
    /// entries or an (effectively) zero total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::InvalidDist {
                reason: format!("cannot normalize: total mass {total}"),
            });
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// The uniform distribution over `len` outcomes.
    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "empty alphabet");
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// The point mass `δ_at` over `len` outcomes.
    pub fn point_mass(len: usize, at: usize) -> Self {
        assert!(at < len, "point mass outside alphabet");
        let mut weights = vec![0.0; len];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Samples an outcome by inverse CDF.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }
}

impl Serialize for Dist {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.weights.len()))?;
        for w in &self.weights {
            seq.serialize_element(w)?;
        }
        seq.end()
    }
}

/// A joint distribution over a product alphabet A × B, stored row-major
/// (entry `(a, b)` at `a * b_size + b`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDist {
    weights: Vec<f64>,
    a_size: usize,
    b_size: usize,
}

/// Selects one factor of a product alphabet A × B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    A,
    B,
}

impl JointDist {
    pub fn new(weights: Vec<f64>, a_size: usize, b_size: usize) -> Result<Self> {
        if weights.len() != a_size * b_size {
            return Err(Error::DimensionMismatch {
                what: "joint distribution",
                expected: a_size * b_size,
                got: weights.len(),
            });
        }
        validate_simplex_point(&weights, "joint distribution")?;
        Ok(Self {
            weights,
            a_size,
            b_size,
        })
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn b_size(&self) -> usize {
        self.b_size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.b_size + b]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn validate_simplex_point(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidDist {
            reason: format!("empty {what}"),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::InvalidDist {
                reason: format!("{what} entry {i} is {w}"),
            });
        }
        if w < ENTRY_FLOOR {
            return Err(Error::InvalidDist {
                reason: format!("{what} entry {i} is negative: {w}"),
            });
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDist {
            reason: format!("{what} sums to {total}, expected 1"),
        });
    }
    Ok(())
}

/// Shannon entropy of `p` in bits, with `0 log 0 := 0`.
pub fn entropy(p: &Dist) -> f64 {
    entropy_of_weights(p.weights())
}

pub(crate) fn entropy_of_weights(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .map(|&w| if w > 0.0 { w * w.log2() } else { 0.0 })
        .sum::<f64>()
}

/// Mutual information `I(p; W)` in bits between the input distributed as `p`
/// and the output of channel `w`, computed as the entropy of the output
/// marginal minus the input-averaged row entropies.
pub fn mutual_information(p: &Dist, w: &Channel) -> Result<f64> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            what: "mutual information input",
            expected: w.input_size(),
            got: p.len(),
        });
    }
    let mut marginal = vec![0.0; w.output_size()];
    let mut conditional = 0.0;
    for (x, &px) in p.weights().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let row = w.row(x);
        for (y, &wyx) in row.iter().enumerate() {
            marginal[y] += px * wyx;
        }
        conditional += px * entropy_of_weights(row);
    }
    Ok((entropy_of_weights(&marginal) - conditional).max(0.0))
}

/// The product distribution `p ⊗ q` on A × B.
pub fn tensor_dist(p: &Dist, q: &Dist) -> JointDist {
    let mut weights = Vec::with_capacity(p.len() * q.len());
    for &pa in p.weights() {
        for &qb in q.weights() {
            weights.push(pa * qb);
        }
    }
    JointDist {
        weights,
        a_size: p.len(),
        b_size: q.len(),
    }
}

/// Marginalizes a joint distribution by summing out the dropped factor.
pub fn partial_trace(v: &JointDist, drop: Factor) -> Dist {
    let weights = match drop {
        Factor::B => (0..v.a_size)
            .map(|a| (0..v.b_size).map(|b| v.get(a, b)).sum())
            .collect(),
        Factor::A => (0..v.b_size)
            .map(|b| (0..v.a_size).map(|a| v.get(a, b)).sum())
            .collect(),
    };
    // Row/column sums of a valid joint distribution form a valid marginal.
    Dist { weights }
}

/// Euclidean distance from `x` to the barycenter of the simplex with the same
/// number of outcomes.
pub fn simplex_center_distance(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    x.iter().map(|&xi| (xi - 1.0 / d).powi(2)).sum::<f64>().sqrt()
}

/// Distance from a vertex of the `d`-outcome simplex to its barycenter.
pub fn t_max(d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0).sqrt() / d.sqrt()
}

/// Distance from the barycenter of a facet (one coordinate zero, the rest
/// uniform) of the `d`-outcome simplex to the simplex barycenter. This is the
/// inradius within the affine hull.
pub fn t_min(d: usize) -> f64 {
    let d = d as f64;
    1.0 / (d * (d - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Channel;

    fn dist(w: &[f64]) -> Dist {
        Dist::new(w.to_vec()).unwrap()
    }

    #[test]
    fn entropy_uniform_four_letters() {
        assert!((entropy(&Dist::uniform(4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        assert_eq!(entropy(&Dist::point_mass(5, 0)), 0.0);
    }

    #[test]
    fn entropy_biased_coin() {
        // Direct evaluation: -(0.9 log2 0.9 + 0.1 log2 0.1) = 0.46899...
        assert!((entropy(&dist(&[0.9, 0.1])) - 0.4690).abs() < 1e-4);
    }

    #[test]
    fn rejects_negative_weight() {
        assert!(Dist::new(vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn rejects_bad_sum() {
        assert!(Dist::new(vec![0.5, 0.4]).is_err());
        assert!(Dist::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn normalized_rescales_on_request() {
        let p = Dist::normalized(vec![2.0, 2.0]).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert!(Dist::normalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn mutual_information_noiseless_binary() {
        let p = dist(&[0.5, 0.5]);
        let id = Channel::identity(2);
        assert!((mutual_information(&p, &id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_constant_channel_is_zero() {
        let rows = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
        let w = Channel::from_rows(rows).unwrap();
        let p = dist(&[0.2, 0.8]);
        assert!(mutual_information(&p, &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mutual_information_bsc() {
        // 1 - H((0.9, 0.1)) via the entropy oracle.
        let expect = 1.0 - entropy(&dist(&[0.9, 0.1]));
        let w = Channel::bsc(0.1).unwrap();
        let got = mutual_information(&dist(&[0.5, 0.5]), &w).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.5310).abs() < 1e-4);
    }

    #[test]
    fn mutual_information_dimension_mismatch() {
        let w = Channel::identity(3);
        assert!(mutual_information(&dist(&[0.5, 0.5]), &w).is_err());
    }

    #[test]
    fn tensor_of_point_masses() {
        let v = tensor_dist(&Dist::point_mass(2, 0), &Dist::point_mass(2, 1));
        assert_eq!(v.weights(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn tensor_of_uniforms_is_uniform() {
        let v = tensor_dist(&Dist::uniform(2), &Dist::uniform(2));
        assert_eq!(v.weights(), &[0.25; 4]);
    }

    #[test]
    fn tensor_entrywise_product() {
        let v = tensor_dist(&dist(&[0.9, 0.1]), &dist(&[0.5, 0.5]));
        let expect = [0.45, 0.45, 0.05, 0.05];
        for (got, want) in v.weights().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_marginals() {
        let p = Dist::point_mass(2, 0);
        let q = Dist::point_mass(2, 1);
        let v = tensor_dist(&p, &q);
        assert_eq!(partial_trace(&v, Factor::B), p);
        assert_eq!(partial_trace(&v, Factor::A), q);
    }

    #[test]
    fn partial_trace_uniform() {
        let v = JointDist::new(vec![0.25; 4], 2, 2).unwrap();
        assert_eq!(partial_trace(&v, Factor::A).weights(), &[0.5, 0.5]);
    }

    #[test]
    fn partial_trace_row_sums() {
        let v = JointDist::new(vec![0.45, 0.45, 0.05, 0.05], 2, 2).unwrap();
        let marginal = partial_trace(&v, Factor::B);
        assert!((marginal.get(0) - 0.9).abs() < 1e-15);
        assert!((marginal.get(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn center_distance_of_barycenter_is_zero() {
        assert!(simplex_center_distance(&[1.0 / 3.0; 3]) < 1e-15);
    }

    #[test]
    fn center_distance_of_vertex_matches_t_max() {
        let got = simplex_center_distance(&[1.0, 0.0, 0.0]);
        assert!((got - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((got - t_max(3)).abs() < 1e-12);
    }

    #[test]
    fn center_distance_of_edge_midpoint_matches_t_min() {
        let got = simplex_center_distance(&[0.5, 0.5, 0.0]);
        assert!((got - 1.0 / 6.0f64.sqrt()).abs() < 1e-12);
        assert!((got - t_min(3)).abs() < 1e-12);
    }
}
