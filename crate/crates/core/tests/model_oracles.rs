//! The sample loss against enumeration and Monte-Carlo oracles.

mod common;

use hyperloom::hypergraph::enumerate_hyperedges;
use hyperloom::model::{alpha_score, sample_loss};
use hyperloom::sampling::case_control_sample;
use hyperloom::simulator::exact_simulate;
use hyperloom::{DesignConfig, Geometry, LabeledSample, ModelParams, SampleRecord};
use rand::Rng as _;

fn enumerated_sample(params: &ModelParams, realized: &dyn Fn(&[usize]) -> bool) -> LabeledSample {
    let n = params.n_nodes();
    let mut s = LabeledSample::new(n, params.k_max()).unwrap();
    for k in 2..=params.k_max() {
        for edge in enumerate_hyperedges(n, k).unwrap() {
            let z = realized(edge.nodes());
            s.push(SampleRecord { edge, z, mu: 1.0 }).unwrap();
        }
    }
    s
}

fn brute_force_nll(params: &ModelParams, sample: &LabeledSample) -> f64 {
    sample
        .records()
        .map(|r| {
            let pi = common::oracle_probability(params, r.edge.nodes());
            if r.z {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum()
}

#[test]
fn enumeration_matches_brute_force() {
    let mut rng = common::rng(1);
    for trial in 0..10 {
        let alphas = [(2, 0.6), (3, 0.2)];
        let params = if trial % 2 == 0 {
            common::hyperbolic_params(&mut rng, 6, 0.7, &alphas, -20.0)
        } else {
            common::euclidean_params(&mut rng, 6, &alphas, -5.0)
        };
        let h = exact_simulate(&params, trial).unwrap();
        let sample = enumerated_sample(&params, &|nodes| h.contains_nodes(nodes));
        let loss = sample_loss(&params, &sample).unwrap().total;
        let oracle = brute_force_nll(&params, &sample);
        assert!((loss - oracle).abs() < 1e-10, "trial {trial}: {loss} vs {oracle}");
    }
}

#[test]
fn horvitz_thompson_is_unbiased() {
    let mut rng = common::rng(2);
    let params = common::hyperbolic_params(&mut rng, 8, 0.6, &[(2, 0.5), (3, 0.3)], -20.0);
    let h = exact_simulate(&params, 11).unwrap();
    // Controls are drawn per case, so each stratum needs a realized edge.
    assert!(h.stratum_len(2) > 0 && h.stratum_len(3) > 0);
    let full = enumerated_sample(&params, &|nodes| h.contains_nodes(nodes));
    let population: Vec<f64> = (2..=3)
        .map(|k| sample_loss(&params, &full).unwrap().by_stratum[&k].0)
        .collect();
    let draws = 2000;
    let mut sums = vec![0.0; 2];
    let mut squares = vec![0.0; 2];
    for seed in 0..draws {
        let sample = case_control_sample(&h, &DesignConfig { n_controls: 2, seed }).unwrap();
        let by = sample_loss(&params, &sample).unwrap().by_stratum;
        for (i, k) in (2..=3).enumerate() {
            let l0 = by.get(&k).map_or(0.0, |v| v.0);
            sums[i] += l0;
            squares[i] += l0 * l0;
        }
    }
    for i in 0..2 {
        let mean = sums[i] / draws as f64;
        let var = squares[i] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - population[i]).abs() <= 3.0 * se.max(1e-12),
            "stratum {}: mean {mean} vs population {} (se {se})",
            i + 2,
            population[i]
        );
    }
}

#[test]
fn alpha_score_brackets_its_root() {
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let params = common::euclidean_params(&mut rng, 10, &[(2, 0.5)], -20.0);
        let mut stratum = Vec::new();
        for edge in enumerate_hyperedges(10, 2).unwrap() {
            if rng.random_bool(0.3) {
                let z = rng.random_bool(0.5);
                let mu = if z { 1.0 } else { rng.random_range(0.1..1.0) };
                stratum.push(SampleRecord { edge, z, mu });
            }
        }
        if !(stratum.iter().any(|r| r.z) && stratum.iter().any(|r| !r.z)) {
            continue;
        }
        // Positive near zero and strictly decreasing, so the root is bracketed
        // by (0, 1] or sits on the bound 1.
        let grid: Vec<f64> = (0..=40).map(|i| 10f64.powf(-9.0 + 9.0 * i as f64 / 40.0)).collect();
        let scores: Vec<f64> = grid.iter().map(|&a| alpha_score(a, &params, &stratum)).collect();
        assert!(scores[0] > 0.0);
        assert!(scores.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn probabilities_match_the_oracle() {
    let mut rng = common::rng(4);
    let params = common::hyperbolic_params(&mut rng, 7, 0.8, &[(2, 0.9), (3, 0.3), (4, 0.1)], -20.0);
    for k in 2..=4 {
        for e in enumerate_hyperedges(7, k).unwrap() {
            let pi = hyperloom::model::edge_probability(&params, &e).unwrap();
            let oracle = common::oracle_probability(&params, e.nodes());
            assert!((pi - oracle).abs() < 1e-13, "{e}: {pi} vs {oracle}");
        }
    }
    assert_eq!(params.geometry, Geometry::Hyperbolic);
}
