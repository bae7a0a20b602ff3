//! Evaluation and identification against independent computations.

mod common;

use hyperloom::eval::{eigenvector_centrality, score_edges};
use hyperloom::geometry::exp_map;
use hyperloom::identify::align_positions;
use hyperloom::simulator::lift_positions;
use hyperloom::{Hyperedge, Hypergraph, LorentzPoint, ModelParams, Positions, SampleRecord};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;

#[test]
fn centrality_matches_a_dense_eigensolve() {
    let mut rng = common::rng(1);
    for _ in 0..20 {
        let mut h = Hypergraph::new(5, 3).unwrap();
        while h.num_edges() < 6 {
            let k = rng.random_range(2..=3);
            let mut nodes: Vec<usize> = (0..5).collect();
            for i in 0..k {
                let j = rng.random_range(i..5);
                nodes.swap(i, j);
            }
            h.insert(Hyperedge::new(nodes[..k].to_vec()).unwrap()).unwrap();
        }
        let edges: Vec<&Hyperedge> = h.edges().collect();
        let a = DMatrix::from_fn(edges.len(), 5, |e, v| if edges[e].contains(v) { 1.0 } else { 0.0 });
        let eig = SymmetricEigen::new(a.transpose() * &a);
        let top = eig.eigenvalues.imax();
        let oracle = eig.eigenvectors.column(top).into_owned();
        let ours = eigenvector_centrality(&h).unwrap();
        let cos: f64 = ours.iter().zip(oracle.iter()).map(|(x, y)| x * y).sum::<f64>().abs();
        assert!(cos > 1.0 - 1e-8, "cosine {cos}");
    }
}

#[test]
fn scores_fall_as_a_pair_is_stretched() {
    let o = LorentzPoint::origin(2);
    let mut scores = Vec::new();
    for i in 0..10 {
        let far = exp_map(&o, &[0.0, 0.3 * (i + 1) as f64, 0.0]).unwrap();
        let positions = Positions::from_rows(&[o.coords().to_vec(), far.into_coords()]).unwrap();
        let params = ModelParams::new(
            positions,
            [(2, 0.7)].into_iter().collect(),
            -20.0,
            hyperloom::Geometry::Hyperbolic,
        )
        .unwrap();
        let r = SampleRecord { edge: Hyperedge::new(vec![0, 1]).unwrap(), z: true, mu: 1.0 };
        scores.push(score_edges(&params, [&r]).unwrap()[0].score);
    }
    assert!(scores.windows(2).all(|w| w[1] < w[0]), "{scores:?}");
}

#[test]
fn alignment_residual_is_symmetric() {
    let mut rng = common::rng(3);
    for _ in 0..10 {
        let a = lift_positions(&common::disk_points(&mut rng, 30, 0.8)).unwrap();
        let b = lift_positions(&common::disk_points(&mut rng, 30, 0.8)).unwrap();
        let ab = align_positions(&a, &b).unwrap().residual;
        let ba = align_positions(&b, &a).unwrap().residual;
        assert!((ab - ba).abs() < 1e-8, "{ab} vs {ba}");
    }
}
