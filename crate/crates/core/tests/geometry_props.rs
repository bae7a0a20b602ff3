//! Property tests for the geometry, the concentration and the text formats.

mod common;

use hyperloom::geometry::{
    exp_map, from_poincare, lorentz_distance, minkowski_dot, project_tangent, to_poincare,
};
use hyperloom::hypergraph::{parse_hypergraph, write_hypergraph};
use hyperloom::model::concentration_g;
use hyperloom::{Geometry, Hyperedge, Hypergraph, LorentzPoint};
use proptest::prelude::*;

fn spatial(r: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, r)
}

fn point2() -> impl Strategy<Value = LorentzPoint> {
    spatial(2).prop_map(|s| LorentzPoint::from_spatial(&s))
}

proptest! {
    #[test]
    fn distance_is_a_metric(x in point2(), y in point2(), z in point2()) {
        let dxy = lorentz_distance(&x, &y).unwrap();
        let dyx = lorentz_distance(&y, &x).unwrap();
        let dxz = lorentz_distance(&x, &z).unwrap();
        let dzy = lorentz_distance(&z, &y).unwrap();
        prop_assert!(dxy >= 0.0);
        prop_assert!((dxy - dyx).abs() < 1e-12);
        prop_assert!(dxy <= dxz + dzy + 1e-9);
        prop_assert!(lorentz_distance(&x, &x).unwrap() < 1e-6);
    }

    #[test]
    fn chart_roundtrip(s in spatial(3)) {
        let x = LorentzPoint::from_spatial(&s);
        let back = from_poincare(&to_poincare(&x));
        for (a, b) in back.coords().iter().zip(x.coords()) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn geodesic_length(s in spatial(2), v in prop::collection::vec(-1.0..1.0f64, 3), len in 0.0..3.0f64) {
        let theta = LorentzPoint::from_spatial(&s);
        let mut t = project_tangent(&theta, &v).unwrap();
        let norm = minkowski_dot(&t, &t).max(0.0).sqrt();
        prop_assume!(norm > 1e-6);
        t.iter_mut().for_each(|c| *c *= len / norm);
        let y = exp_map(&theta, &t).unwrap();
        prop_assert!((lorentz_distance(&theta, &y).unwrap() - len).abs() < 1e-8);
    }

    #[test]
    fn concentration_bounds(
        rows in prop::collection::vec(spatial(2), 2..7),
        p in prop::sample::select(vec![-2.0, -5.0, -20.0, -50.0, -200.0]),
    ) {
        let k = rows.len();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = concentration_g(&refs, p, Geometry::Euclidean).unwrap();
        let sums: Vec<f64> = (0..k)
            .map(|i| (0..k).filter(|&j| j != i)
                .map(|j| common::oracle_distance(refs[i], refs[j], Geometry::Euclidean)).sum())
            .collect();
        let m = sums.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(g >= m * (1.0 - 1e-12));
        prop_assert!(g <= m * (k as f64).powf(1.0 / -p) * (1.0 + 1e-12));
    }

    #[test]
    fn hypergraph_text_roundtrip(edges in prop::collection::vec(prop::collection::btree_set(0usize..12, 2..=4), 0..30)) {
        let mut h = Hypergraph::new(12, 4).unwrap();
        for e in edges {
            h.insert(Hyperedge::new(e.into_iter().collect()).unwrap()).unwrap();
        }
        let mut buf = Vec::new();
        write_hypergraph(&h, &mut buf).unwrap();
        let back = parse_hypergraph(buf.as_slice()).unwrap();
        prop_assert_eq!(back.num_edges(), h.num_edges());
        prop_assert!(h.edges().all(|e| back.contains(e)));
        let mut again = Vec::new();
        write_hypergraph(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}
