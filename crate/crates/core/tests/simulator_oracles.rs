//! The simulator against closed forms and enumeration.

mod common;

use std::collections::HashMap;

use hyperloom::hypergraph::{binomial_f64, enumerate_hyperedges};
use hyperloom::model::edge_probability;
use hyperloom::rng::{substream, Domain};
use hyperloom::simulator::{
    draw_edge_count, exact_simulate, generate_positions, radial_cdf, rejection_sample_edges,
    simulate_with_report,
};
use hyperloom::SimConfig;

#[test]
fn generated_positions_follow_the_radial_law() {
    let cfg = SimConfig { seed: 17, ..SimConfig::default() };
    let points = generate_positions(100_000, 2, &cfg).unwrap();
    let mut radii: Vec<f64> = points
        .iter()
        .map(|p| p.coords().iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = radii.len() as f64;
    let ks = radii
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = radial_cdf(z, cfg.gamma, cfg.rho);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");

    let (mut c, mut s) = (0.0, 0.0);
    for p in &points {
        let t = p.coords()[1].atan2(p.coords()[0]);
        c += t.cos();
        s += t.sin();
    }
    let resultant = (c * c + s * s).sqrt() / n;
    assert!(resultant < 0.02, "mean resultant length {resultant}");
}

#[test]
fn poisson_counts_have_the_right_moments() {
    let (n, k) = (10, 2);
    let rho = 7.3 / binomial_f64(n, k);
    let mut rng = substream(3, Domain::Scratch, 0);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| draw_edge_count(rho, n, k, &mut rng).unwrap() as f64)
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (draws.len() - 1) as f64;
    assert!((mean - 7.3).abs() < 0.1, "mean {mean}");
    assert!((0.95..=1.05).contains(&(var / mean)), "variance ratio {}", var / mean);
}

#[test]
fn rejection_draws_are_proportional_to_probability() {
    let mut rng = common::rng(5);
    let params = common::hyperbolic_params(&mut rng, 6, 0.8, &[(2, 0.5)], -20.0);
    let edges = enumerate_hyperedges(6, 2).unwrap();
    let weights: Vec<f64> = edges.iter().map(|e| edge_probability(&params, e).unwrap()).collect();
    let total: f64 = weights.iter().sum();
    let index: HashMap<_, _> = edges.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    let runs = 20_000;
    let mut counts = vec![0u32; edges.len()];
    let mut draw_rng = substream(5, Domain::SimulateStratum, 2);
    for _ in 0..runs {
        let draw = rejection_sample_edges(&params, 2, 1, &mut draw_rng).unwrap();
        assert_eq!(draw.edges.len(), 1);
        counts[index[&draw.edges[0]]] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(&weights)
            .map(|(&c, w)| (c as f64 / runs as f64 - w / total).abs())
            .sum::<f64>();
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn realized_counts_track_the_mean_density() {
    let mut rng = common::rng(6);
    let params = common::hyperbolic_params(&mut rng, 8, 0.7, &[(2, 0.4), (3, 0.1)], -20.0);
    let runs = 50;
    let mut totals = [0.0; 2];
    let mut rho_hat = [0.0; 2];
    for seed in 0..runs {
        let cfg = SimConfig { density_subset_size: 8, mh_iters: 2000, seed, ..SimConfig::default() };
        let (h, reports) = simulate_with_report(&params, &cfg).unwrap();
        for (i, k) in (2..=3).enumerate() {
            totals[i] += h.stratum_len(k) as f64;
            rho_hat[i] = reports.iter().find(|r| r.k == k).unwrap().rho_hat;
        }
    }
    for (i, k) in (2..=3).enumerate() {
        let lambda = rho_hat[i] * binomial_f64(8, k);
        let mean = totals[i] / runs as f64;
        let se = (lambda / runs as f64).sqrt();
        assert!((mean - lambda).abs() <= 3.0 * se, "k = {k}: mean count {mean} vs λ {lambda}");
    }
}

#[test]
fn exact_marginals_are_binomial() {
    let mut rng = common::rng(7);
    let params = common::hyperbolic_params(&mut rng, 6, 0.7, &[(2, 0.5), (3, 0.2)], -20.0);
    let edge = enumerate_hyperedges(6, 3).unwrap()[4].clone();
    let pi = edge_probability(&params, &edge).unwrap();
    let runs = 10_000;
    let hits = (0..runs).filter(|&s| exact_simulate(&params, s).unwrap().contains(&edge)).count();
    let freq = hits as f64 / runs as f64;
    let se = (pi * (1.0 - pi) / runs as f64).sqrt();
    assert!((freq - pi).abs() <= 3.0 * se, "frequency {freq} vs π {pi}");
}
