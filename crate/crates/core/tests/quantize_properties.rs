mod common;

use avc_core::feasibility::{hulls_intersect, HullPair};
use avc_core::prob::{simplex_center_distance, t_max, t_min};
use avc_core::quantize::{
    disjoint_projection, fixing_rotation, reduce_to_binary, shrink_lambda, shrink_map, Hyperplane,
};
use rand::Rng;

// λ(d)·t_max(d) = t_min(d) exactly, and λ(d) simplifies to 1/(d−1).
#[test]
fn shrink_factor_ties_the_two_radii() {
    for d in 2..=50usize {
        let lambda = shrink_lambda(d).unwrap();
        assert!(
            (lambda * t_max(d) - t_min(d)).abs() < 1e-12,
            "radius identity fails at d = {d}"
        );
        assert!(
            (lambda - 1.0 / (d as f64 - 1.0)).abs() < 1e-12,
            "closed form fails at d = {d}"
        );
    }
}

// Shrinking after an arbitrary barycenter-fixing rotation lands inside the
// simplex, for points anywhere in the circumscribed ball.
#[test]
fn shrink_after_rotation_stays_in_simplex() {
    let mut rng = common::rng(41);
    let mut tested = 0;
    while tested < 10_000 {
        let d = 3 + (tested % 4);
        // Random point at distance ≤ t_max from the barycenter, inside the
        // sum-one hyperplane but possibly outside the simplex.
        let dir = common::random_centered_direction(&mut rng, d);
        let radius: f64 = rng.random::<f64>() * t_max(d);
        let point: Vec<f64> = dir
            .iter()
            .map(|&v| 1.0 / d as f64 + radius * v)
            .collect();

        // Random rotation from a random alignable hyperplane.
        let normal = common::random_centered_direction(&mut rng, d);
        let offset_shift: f64 = (rng.random::<f64>() * 2.0 - 1.0) * t_min(d);
        let mean = normal.iter().sum::<f64>() / d as f64;
        let hyper = Hyperplane::new(normal, mean + offset_shift).unwrap();
        let Ok(rotation) = fixing_rotation(&hyper) else {
            continue;
        };

        let image = shrink_map(d).unwrap().apply(&rotation.apply(&point));
        let min = image.iter().cloned().fold(f64::INFINITY, f64::min);
        let sum: f64 = image.iter().sum();
        assert!(min >= -1e-12, "coordinate {min} at d = {d}");
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(simplex_center_distance(&image) <= t_min(d) + 1e-9);
        tested += 1;
    }
}

#[test]
fn rotations_are_orthogonal_and_fix_ones() {
    let mut rng = common::rng(42);
    let mut tested = 0;
    while tested < 300 {
        let d = 3 + (tested % 5);
        let normal = common::random_centered_direction(&mut rng, d);
        let mean = normal.iter().sum::<f64>() / d as f64;
        let shift: f64 = (rng.random::<f64>() * 2.0 - 1.0) * t_min(d);
        let Ok(rotation) = fixing_rotation(&Hyperplane::new(normal.clone(), mean + shift).unwrap())
        else {
            continue;
        };
        let m = rotation.matrix();
        for i in 0..d {
            for j in 0..d {
                let col_dot: f64 = (0..d).map(|k| m[k][i] * m[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((col_dot - expect).abs() < 1e-10);
            }
        }
        let ones = rotation.apply(&vec![1.0; d]);
        assert!(ones.iter().all(|&v| (v - 1.0).abs() < 1e-10));
        let aligned = rotation.apply(&normal);
        assert!((aligned[d - 1] - (mean + shift)).abs() < 1e-8);
        tested += 1;
    }
}

// Strict-side preservation of the vertex-to-face projection on random valid
// instances.
#[test]
fn projection_preserves_strict_sides() {
    let mut rng = common::rng(43);
    let mut tested = 0;
    while tested < 10_000 {
        let d = 3 + (tested % 3);
        // Interior point of the opposite face.
        let mut p = common::random_simplex_point(&mut rng, d - 1);
        let floor = 1e-3;
        let total: f64 = p.iter().map(|v| v + floor).sum();
        for v in p.iter_mut() {
            *v = (*v + floor) / total;
        }
        // Normal with vᵀp = c and v_{d−1} = c.
        let face_normal: Vec<f64> = (0..d - 1).map(|_| common::random_normal(&mut rng)).collect();
        let c: f64 = face_normal.iter().zip(&p).map(|(a, b)| a * b).sum();
        let mut normal = face_normal;
        normal.push(c);
        let Ok(hyper) = Hyperplane::new(normal, c) else {
            continue;
        };
        let Ok(projection) = disjoint_projection(&hyper, &p) else {
            continue;
        };

        let mu: f64 = rng.random();
        let face_point = common::random_simplex_point(&mut rng, d - 1);
        let mut q: Vec<f64> = face_point.iter().map(|&v| (1.0 - mu) * v).collect();
        q.push(mu);
        let side = hyper.side(&q);
        if side.abs() < 1e-12 {
            continue;
        }
        let image = projection.apply(&q);
        let truncated: f64 =
            hyper.normal[..d - 1].iter().zip(&image).map(|(a, b)| a * b).sum::<f64>() - c;
        assert!(
            side.signum() == truncated.signum(),
            "side flipped: {side} -> {truncated} (d = {d})"
        );
        tested += 1;
    }
}

// End-to-end pipeline on randomly split hulls: every stage verified inside
// reduce_to_binary, images re-checked disjoint here with the LP.
#[test]
fn reduction_campaign_preserves_disjointness() {
    let mut rng = common::rng(44);
    for trial in 0..30 {
        let per_side = 3 + (trial % 3);
        let (a, b) = common::random_disjoint_hulls(&mut rng, 4, per_side, 0.04);
        let (map, trace) = reduce_to_binary(&a, &b)
            .unwrap_or_else(|e| panic!("reduction failed at trial {trial}: {e}"));
        assert_eq!(trace.stages.len(), 2);
        let im_a: Vec<Vec<f64>> = a.iter().map(|p| map.apply(p)).collect();
        let im_b: Vec<Vec<f64>> = b.iter().map(|p| map.apply(p)).collect();
        let pair = HullPair::new(im_a, im_b).unwrap();
        assert!(hulls_intersect(&pair).unwrap().is_disjoint());
    }
}

#[test]
fn reduction_records_stage_data() {
    let mut rng = common::rng(45);
    let (a, b) = common::random_disjoint_hulls(&mut rng, 5, 3, 0.04);
    let (map, trace) = reduce_to_binary(&a, &b).unwrap();
    assert_eq!(map.source_dim(), 5);
    assert_eq!(map.target_dim(), 2);
    assert_eq!(trace.stages.len(), 3);
    for (i, stage) in trace.stages.iter().enumerate() {
        assert_eq!(stage.dim, 5 - i);
        assert!((stage.lambda - 1.0 / (stage.dim as f64 - 1.0)).abs() < 1e-12);
        assert_eq!(stage.extension, stage.dim == 3);
        assert_eq!(stage.rotation.len(), stage.dim);
        assert_eq!(stage.projection_target.len(), stage.dim - 1);
    }
    let json = serde_json::to_string(&trace).unwrap();
    assert!(json.contains("projection_target"));
}
