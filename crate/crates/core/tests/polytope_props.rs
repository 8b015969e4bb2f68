mod common;

use awayfw::polytope::{FaceDescription, Polytope, TieBreakPolicy, VertexId};
use awayfw::{DenseMatrix, Error};
use proptest::prelude::*;

fn enumerated_min(p: &Polytope, g: &[f64]) -> f64 {
    p.vertices()
        .unwrap()
        .iter()
        .map(|v| v.coords().iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn value(p: &Polytope, id: VertexId, g: &[f64]) -> f64 {
    let v = p.vertex(id).unwrap();
    v.coords().iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Gradients with many exact ties: small integers.
fn tied_gradient(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-2i32..=2).prop_map(f64::from), d)
}

fn any_polytope() -> impl Strategy<Value = Polytope> {
    prop_oneof![
        (2usize..10, 0.1f64..3.0).prop_map(|(d, s)| Polytope::unit_simplex(d, s).unwrap()),
        (1usize..10).prop_map(|d| Polytope::down_closed_simplex(d).unwrap()),
        (1usize..=12).prop_map(|d| Polytope::hypercube(d).unwrap()),
    ]
}

proptest! {
    #[test]
    fn lmo_attains_enumerated_minimum(
        p in any_polytope(),
        seed in any::<u64>(),
        tied in any::<bool>(),
    ) {
        let d = p.dim();
        let mut rng = common::rng(seed);
        let g: Vec<f64> = if tied {
            (0..d).map(|_| (common::gaussian(&mut rng) * 1.5).round()).collect()
        } else {
            (0..d).map(|_| common::gaussian(&mut rng)).collect()
        };
        let best = enumerated_min(&p, &g);
        for policy in [TieBreakPolicy::FirstIndex, TieBreakPolicy::adversarial([VertexId(0), VertexId(1)])] {
            let u = p.lmo(&g, &policy).unwrap();
            prop_assert_eq!(value(&p, u.id(), &g), best);
        }
    }

    #[test]
    fn explicit_lmo_attains_minimum(
        pts in prop::collection::vec(prop::collection::vec(-3i32..=3, 3), 2..8),
        g in tied_gradient(3),
    ) {
        let vertices: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|&x| f64::from(x)).collect()).collect();
        let p = Polytope::explicit(vertices.clone()).unwrap();
        let u = p.lmo(&g, &TieBreakPolicy::FirstIndex).unwrap();
        let vals: Vec<f64> = vertices.iter().map(|v| v.iter().zip(&g).map(|(a, b)| a * b).sum()).collect();
        let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(vals[u.id().0 as usize], best);
        // Smallest list index among exact ties.
        prop_assert_eq!(u.id().0 as usize, vals.iter().position(|&v| v == best).unwrap());
    }

    #[test]
    fn hull_membership_matches_brute_force_distance(
        pts in prop::collection::vec(prop::collection::vec(-3i32..=3, 3), 2..6),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        prop_assume!(pts.iter().any(|p| p != &pts[0]));
        let vertices: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|&c| f64::from(c)).collect()).collect();
        let p = Polytope::explicit(vertices.clone()).unwrap();
        let identity = DenseMatrix::from_row_major(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let dist = (2.0 * common::brute_force_hull_min(&identity, &x, &vertices)).max(0.0).sqrt();
        for tol in [0.05, 0.5, 1.0] {
            // Skip tolerances within rounding of the true distance.
            if (dist - tol).abs() > 1e-9 {
                prop_assert_eq!(p.contains(&x, tol).unwrap(), dist <= tol, "dist {}", dist);
            }
        }
        // Convex combinations of the vertices are members.
        let w = common::random_simplex_point(&mut common::rng(x[0].to_bits()), vertices.len(), 1.0);
        let y: Vec<f64> = (0..3).map(|k| vertices.iter().zip(&w).map(|(v, wi)| wi * v[k]).sum()).collect();
        prop_assert!(p.contains(&y, 1e-9).unwrap());
    }

    #[test]
    fn tie_break_is_deterministic(p in any_polytope(), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g: Vec<f64> = (0..p.dim()).map(|_| (common::gaussian(&mut rng)).round()).collect();
        let policy = TieBreakPolicy::adversarial([VertexId(1), VertexId(2)]);
        let a = p.lmo(&g, &policy).unwrap();
        let b = p.lmo(&g, &policy).unwrap();
        prop_assert_eq!(a.id(), b.id());
        prop_assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn adversarial_policy_avoids_forbidden_when_possible(
        p in any_polytope(),
        seed in any::<u64>(),
        forbid_count in 0usize..6,
    ) {
        let mut rng = common::rng(seed);
        let g: Vec<f64> = (0..p.dim()).map(|_| (common::gaussian(&mut rng) * 0.7).round()).collect();
        let all = p.vertices().unwrap();
        let best = enumerated_min(&p, &g);
        let optimal: Vec<VertexId> = all.iter().filter(|v| value(&p, v.id(), &g) == best).map(|v| v.id()).collect();
        let forbidden: Vec<VertexId> = optimal.iter().copied().take(forbid_count).collect();
        let u = p.lmo(&g, &TieBreakPolicy::adversarial(forbidden.clone())).unwrap();
        prop_assert_eq!(value(&p, u.id(), &g), best);
        if optimal.iter().any(|id| !forbidden.contains(id)) {
            prop_assert!(!forbidden.contains(&u.id()));
        }
    }

    #[test]
    fn simplex_diameter_ignores_dimension(d in 2usize..200, scale in 0.01f64..10.0) {
        let p = Polytope::unit_simplex(d, scale).unwrap();
        prop_assert!((p.diameter() - scale * 2f64.sqrt()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn face_dimension_matches_tight_constraints(
        d in 2usize..9,
        mask in 1u32..512,
        down_closed in any::<bool>(),
        with_origin in any::<bool>(),
    ) {
        let mut ids: Vec<VertexId> = (0..d).filter(|i| mask >> i & 1 == 1).map(|i| VertexId(i as u64 + 1)).collect();
        prop_assume!(!ids.is_empty());
        let (p, scale) = if down_closed {
            if with_origin {
                ids.push(VertexId(0));
            }
            (Polytope::down_closed_simplex(d).unwrap(), 1.0)
        } else {
            (Polytope::unit_simplex(d, 1.0).unwrap(), 1.0)
        };
        let face = p.face_of_support(&ids).unwrap();
        // Barycenter of the spanning vertices lies in the face's relative interior.
        let mut x = vec![0.0; d];
        for id in &ids {
            for (xi, vi) in x.iter_mut().zip(p.vertex(*id).unwrap().coords()) {
                *xi += vi / ids.len() as f64;
            }
        }
        prop_assert_eq!(face.dim, common::face_dim_by_tight_constraints(&x, scale, down_closed));
    }

    #[test]
    fn kappa_scales_with_simplex_size(
        d in 3usize..8,
        k in 2usize..4,
        scale in 0.2f64..5.0,
        alpha in 0.1f64..10.0,
    ) {
        prop_assume!(k <= d);
        let ids: Vec<VertexId> = (1..=k as u64).map(VertexId).collect();
        let unit = Polytope::unit_simplex(d, 1.0).unwrap();
        let scaled = Polytope::unit_simplex(d, scale).unwrap();
        let face = unit.face_of_support(&ids).unwrap();
        let a = unit.kappa_diagnostics(&face, alpha).unwrap();
        let b = scaled.kappa_diagnostics(&face, alpha).unwrap();
        prop_assert!((b.xi_star - scale * a.xi_star).abs() <= 1e-12 * b.xi_star);
        prop_assert!((b.kappa_tilde - a.kappa_tilde / (scale * scale)).abs() <= 1e-9 * a.kappa_tilde / (scale * scale));
        prop_assert!((b.psi_star - a.psi_star).abs() <= 1e-12);
    }
}

#[test]
fn face_queries_outside_simplex_family_are_unsupported() {
    let cube = Polytope::hypercube(3).unwrap();
    assert!(matches!(
        cube.face_of_support(&[VertexId(0)]),
        Err(Error::Unsupported(_))
    ));
    let face = FaceDescription {
        vertex_ids: [VertexId(0), VertexId(1)].into_iter().collect(),
        dim: 1,
    };
    assert!(matches!(cube.kappa_diagnostics(&face, 1.0), Err(Error::Unsupported(_))));
}

#[test]
fn explicit_vertices_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.txt");
    std::fs::write(&path, "0 0\n1 0\n\n0 1\n1 1\n").unwrap();
    let p = Polytope::explicit_from_file(&path).unwrap();
    assert_eq!(p.vertex_count(), 4);
    assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-15);
    assert!(p.contains(&[0.5, 0.5], 1e-9).unwrap());
    assert!(!p.contains(&[1.5, 0.5], 1e-9).unwrap());

    std::fs::write(&path, "0 0\n1 x\n").unwrap();
    match Polytope::explicit_from_file(&path) {
        Err(Error::Parse { msg, .. }) => assert!(msg.contains("line 2"), "{msg}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
