//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hyperloom::rng::{substream, Domain, Rng};
use hyperloom::simulator::lift_positions;
use hyperloom::{Geometry, LorentzPoint, ModelParams, PoincarePoint, Positions};
use rand::Rng as _;

pub fn rng(tag: u64) -> Rng {
    substream(0x7e57, Domain::Scratch, tag)
}

pub fn normal(rng: &mut Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// A point at geodesic distance `radius` from the origin, uniform direction.
pub fn point_at(rng: &mut Rng, r: usize, radius: f64) -> LorentzPoint {
    let mut dir: Vec<f64> = (0..r).map(|_| normal(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    dir.iter_mut().for_each(|v| *v *= radius.sinh() / norm);
    LorentzPoint::from_spatial(&dir)
}

/// `n` points uniform (by area) in the Poincaré disk of radius `rho`.
pub fn disk_points(rng: &mut Rng, n: usize, rho: f64) -> Vec<PoincarePoint> {
    (0..n)
        .map(|_| {
            let rad = rho * rng.random::<f64>().sqrt();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            PoincarePoint::new(vec![rad * t.cos(), rad * t.sin()]).unwrap()
        })
        .collect()
}

pub fn hyperbolic_params(rng: &mut Rng, n: usize, rho: f64, alphas: &[(usize, f64)], p: f64) -> ModelParams {
    let alphas: BTreeMap<usize, f64> = alphas.iter().copied().collect();
    ModelParams::new(lift_positions(&disk_points(rng, n, rho)).unwrap(), alphas, p, Geometry::Hyperbolic)
        .unwrap()
}

pub fn euclidean_params(rng: &mut Rng, n: usize, alphas: &[(usize, f64)], p: f64) -> ModelParams {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    ModelParams::new(
        Positions::from_rows(&rows).unwrap(),
        alphas.iter().copied().collect(),
        p,
        Geometry::Euclidean,
    )
    .unwrap()
}

/// Independent distance used by the oracles.
pub fn oracle_distance(a: &[f64], b: &[f64], geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Hyperbolic => {
            let inner = -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>();
            (-inner).max(1.0).acosh()
        }
        Geometry::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Independent `π` of the units `nodes`.
pub fn oracle_probability(params: &ModelParams, nodes: &[usize]) -> f64 {
    let k = nodes.len();
    let sums: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| {
                    oracle_distance(
                        params.positions.row(nodes[i]),
                        params.positions.row(nodes[j]),
                        params.geometry,
                    )
                })
                .sum()
        })
        .collect();
    let p = params.p;
    let g = (sums.iter().map(|d| d.powf(p)).sum::<f64>() / k as f64).powf(1.0 / p);
    params.alphas[&k] * 2.0 * (-g).exp() / (1.0 + (-g).exp())
}
