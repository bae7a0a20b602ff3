//! Blockwise minimization of the sample loss.
//!
//! Each outer iteration first solves for every `α_k` (the stratum loss is
//! convex in `α_k`, so the root of its score is found by bisection), then
//! moves every position in ascending node order. A hyperbolic position moves
//! along the geodesic in the direction `−proj_θ(J ∇ℓ̂)`; the step length is
//! chosen by Brent's method and a step is only taken if it lowers the loss,
//! which makes the loss trace non-increasing.

mod brent;

pub use brent::{brent_minimize, LineSearchFailure};

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    geodesic_step, minkowski_dot, project_tangent_in_place, LorentzPoint,
    PoincarePoint,
};
use crate::hypergraph::LabeledSample;
use crate::model::{
    accumulate_record_grad, alpha_score_terms, edge_concentration, record_loss, sample_loss,
    sigma, EdgeScratch, Geometry, ModelParams, Positions,
};
use crate::rng::{substream, Domain};

/// Lower bound for every fitted `α_k`.
pub const ALPHA_MIN: f64 = 1e-12;

/// Doublings of the line-search bracket allowed when the minimizer sits on
/// its upper end.
const MAX_BRACKET_DOUBLINGS: u32 = 10;

const LINE_SEARCH_EVALS: usize = 60;

/// Hyperbolic positions stay within this geodesic distance of the origin.
/// Beyond it the Lorentz time coordinate exceeds about 8·10⁴ and distances
/// between nearby units lose precision.
pub const MAX_RADIUS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop once `|ℓ̂_t − ℓ̂_{t+1}| / |ℓ̂_{t+1}|` drops below this.
    pub rel_tol: f64,
    /// Initial upper end of the line-search bracket, in units of geodesic
    /// (or Euclidean) step length.
    pub eta_max: f64,
    /// Absolute tolerance of the line search on the step length.
    pub line_search_tol: f64,
    pub starts: usize,
    /// Initial positions are uniform on `[-h, h]^r` in the Poincaré disk.
    pub init_square_halfwidth: f64,
    pub seed: u64,
    /// Allow nondeterministic parallel reductions.
    pub parallel: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-5,
            eta_max: 1.0,
            line_search_tol: 1e-7,
            starts: 1,
            init_square_halfwidth: 0.1,
            seed: 0,
            parallel: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iters > 0
            && self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.eta_max > 0.0
            && self.line_search_tol > 0.0
            && self.starts > 0
            && self.init_square_halfwidth > 0.0;
        if !positive {
            return Err(Error::Config(format!("invalid fit configuration {self:?}")));
        }
        if self.init_square_halfwidth * std::f64::consts::SQRT_2 >= 1.0 {
            return Err(Error::Config(
                "initial square must lie inside the unit disk".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// `ℓ̂` at initialization followed by `ℓ̂` after each iteration.
    pub loss_trace: Vec<f64>,
    /// `α` after each iteration (entry 0 holds the initial values).
    pub alpha_trace: Vec<BTreeMap<usize, f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    /// Index of the selected run in a multi-start fit.
    pub start: usize,
}

impl FitReport {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace holds the initial loss")
    }
}

/// Per-node list of incident records `(stratum, record index, local index)`,
/// in stratum-then-record order.
struct Incidence {
    lists: Vec<Vec<(u32, u32, u32)>>,
}

impl Incidence {
    fn build(sample: &LabeledSample) -> Self {
        let mut lists = vec![Vec::new(); sample.n_nodes()];
        for k in sample.sizes() {
            for (idx, r) in sample.stratum(k).iter().enumerate() {
                for (local, &v) in r.edge.nodes().iter().enumerate() {
                    lists[v].push((k as u32, idx as u32, local as u32));
                }
            }
        }
        Self { lists }
    }

    fn for_node(sample: &LabeledSample, h: usize) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for k in sample.sizes() {
            for (idx, r) in sample.stratum(k).iter().enumerate() {
                if let Some(local) = r.edge.nodes().iter().position(|&v| v == h) {
                    out.push((k as u32, idx as u32, local as u32));
                }
            }
        }
        out
    }
}

/// The `α_k` minimizing the stratum-`k` loss at the current positions.
///
/// Bisection on the (strictly decreasing) score over `[ALPHA_MIN, 1]`; a
/// score of constant sign returns the corresponding bound. An empty stratum
/// leaves `α_k` unchanged.
pub fn update_alpha(params: &ModelParams, sample: &LabeledSample, k: usize) -> Result<f64> {
    let records = sample.stratum(k);
    if records.is_empty() {
        return params.alpha(k);
    }
    let mut scratch = EdgeScratch::default();
    let gs: Vec<f64> = records
        .iter()
        .map(|r| edge_concentration(params, r.edge.nodes(), &mut scratch))
        .collect();
    let terms: Vec<(bool, f64, f64)> = records
        .iter()
        .zip(&gs)
        .map(|(r, &g)| (r.z, r.mu, sigma(-g)))
        .collect();
    let next = solve_alpha(&terms);
    let stratum_loss = |a: f64| -> f64 {
        records
            .iter()
            .zip(&gs)
            .map(|(r, &g)| record_loss(a, g, r.z, r.mu))
            .sum()
    };
    // Keep the current value when the root is no better at machine precision.
    match params.alphas.get(&k) {
        Some(&a) if a > 0.0 && a <= 1.0 && stratum_loss(a) <= stratum_loss(next) => Ok(a),
        _ => Ok(next),
    }
}

fn solve_alpha(terms: &[(bool, f64, f64)]) -> f64 {
    let score = |a: f64| alpha_score_terms(a, terms);
    if score(1.0) >= 0.0 {
        return 1.0;
    }
    if score(ALPHA_MIN) <= 0.0 {
        return ALPHA_MIN;
    }
    let (mut lo, mut hi) = (ALPHA_MIN, 1.0);
    for _ in 0..400 {
        // Geometric midpoints until the bracket is within a factor of two.
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let s = score(mid);
        if s.abs() < 1e-10 {
            return mid;
        }
        if s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Loss of the records incident to `node`, with `node`'s row replaced by
/// `row`.
fn local_loss(
    params: &ModelParams,
    sample: &LabeledSample,
    alphas: &[f64],
    incident: &[(u32, u32, u32)],
    node: usize,
    row: &[f64],
    scratch: &mut EdgeScratch,
) -> f64 {
    let pos = &params.positions;
    let mut total = 0.0;
    for &(k, idx, _) in incident {
        let r = &sample.stratum(k as usize)[idx as usize];
        let nodes = r.edge.nodes();
        let g = scratch.concentration(
            nodes.len(),
            |i| {
                if nodes[i] == node {
                    row
                } else {
                    pos.row(nodes[i])
                }
            },
            params.p,
            params.geometry,
        );
        total += record_loss(alphas[k as usize], g, r.z, r.mu);
    }
    total
}

fn local_grad(
    params: &ModelParams,
    sample: &LabeledSample,
    alphas: &[f64],
    incident: &[(u32, u32, u32)],
    parallel: bool,
) -> Vec<f64> {
    let width = params.positions.width();
    let term = |scratch: &mut EdgeScratch, acc: &mut Vec<f64>, &(k, idx, local): &(u32, u32, u32)| {
        let r = &sample.stratum(k as usize)[idx as usize];
        accumulate_record_grad(params, scratch, alphas[k as usize], r, local as usize, acc);
    };
    if parallel {
        incident
            .par_iter()
            .fold(
                || (EdgeScratch::default(), vec![0.0; width]),
                |(mut s, mut acc), item| {
                    term(&mut s, &mut acc, item);
                    (s, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(
                || vec![0.0; width],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    } else {
        let mut scratch = EdgeScratch::default();
        let mut acc = vec![0.0; width];
        for item in incident {
            term(&mut scratch, &mut acc, item);
        }
        acc
    }
}

fn alpha_table(params: &ModelParams, k_max: usize) -> Result<Vec<f64>> {
    let mut t = vec![f64::NAN; k_max + 1];
    for k in 2..=k_max {
        t[k] = params.alpha(k)?;
    }
    Ok(t)
}

/// Moves node `node` and returns its new row. The row only changes if the
/// loss strictly decreases.
fn move_node(
    params: &ModelParams,
    sample: &LabeledSample,
    alphas: &[f64],
    incident: &[(u32, u32, u32)],
    node: usize,
    cfg: &FitConfig,
) -> Vec<f64> {
    let theta = params.positions.row(node).to_vec();
    if incident.is_empty() {
        return theta;
    }
    let grad = local_grad(params, sample, alphas, incident, cfg.parallel);
    // Unit-speed descent direction.
    let mut dir = grad;
    let norm = match params.geometry {
        Geometry::Hyperbolic => {
            dir[0] = -dir[0];
            project_tangent_in_place(&theta, &mut dir);
            minkowski_dot(&dir, &dir).max(0.0).sqrt()
        }
        Geometry::Euclidean => dir.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    if !(norm > 1e-14) || !norm.is_finite() {
        return theta;
    }
    dir.iter_mut().for_each(|v| *v = -*v / norm);

    let mut scratch = EdgeScratch::default();
    let mut cand = theta.clone();
    let place = |eta: f64, out: &mut [f64]| match params.geometry {
        Geometry::Hyperbolic => geodesic_step(&theta, &dir, 1.0, eta, out),
        Geometry::Euclidean => {
            for ((o, t), d) in out.iter_mut().zip(&theta).zip(&dir) {
                *o = t + eta * d;
            }
        }
    };
    let f0 = local_loss(params, sample, alphas, incident, node, &theta, &mut scratch);

    let cap = match params.geometry {
        Geometry::Hyperbolic => step_to_radius(&theta, &dir, MAX_RADIUS),
        Geometry::Euclidean => f64::INFINITY,
    };
    if !(cap > 0.0) {
        return theta;
    }
    let mut hi = cfg.eta_max.min(cap);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..=MAX_BRACKET_DOUBLINGS {
        let res = brent_minimize(
            |eta| {
                place(eta, &mut cand);
                local_loss(params, sample, alphas, incident, node, &cand, &mut scratch)
            },
            0.0,
            hi,
            cfg.line_search_tol,
            LINE_SEARCH_EVALS,
        );
        match res {
            Ok((eta, f)) => {
                best = Some((eta, f));
                if eta < hi || hi >= cap {
                    break;
                }
                hi = (2.0 * hi).min(cap);
            }
            // Non-finite loss somewhere in the bracket: keep the last good step.
            Err(_) => break,
        }
    }
    match best {
        Some((eta, f)) if f < f0 && eta > 0.0 => {
            let mut out = theta.clone();
            place(eta, &mut out);
            out
        }
        _ => theta,
    }
}

/// Largest `η` with `cosh η · θ + sinh η · d` inside the geodesic ball of
/// radius `radius` about the origin, for a unit tangent `d`.
fn step_to_radius(theta: &[f64], d: &[f64], radius: f64) -> f64 {
    let (a, b, c) = (theta[0], d[0], radius.cosh());
    // Time coordinate: ((a+b) y + (a−b) / y) / 2 with y = e^η.
    let s = a + b;
    if s <= 1e-300 {
        return f64::INFINITY;
    }
    let disc = c * c - s * (a - b);
    if disc < 0.0 {
        return 0.0;
    }
    ((c + disc.sqrt()) / s).ln()
}

/// One position update of node `i` with everything else held fixed.
pub fn update_position(
    params: &ModelParams,
    sample: &LabeledSample,
    i: usize,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    if i >= params.n_nodes() {
        return Err(Error::domain(format!("node {i} out of range")));
    }
    let alphas = alpha_table(params, sample.k_max())?;
    let incident = Incidence::for_node(sample, i);
    Ok(move_node(params, sample, &alphas, &incident, i, cfg))
}

/// Random initial positions: uniform on the square `[-h, h]^r` of the
/// Poincaré disk, lifted to the hyperboloid for the hyperbolic geometry.
pub fn initial_positions(
    n: usize,
    r: usize,
    geometry: Geometry,
    halfwidth: f64,
    rng: &mut impl rand::Rng,
) -> Positions {
    let width = geometry.row_width(r);
    let mut data = Vec::with_capacity(n * width);
    for _ in 0..n {
        let p: Vec<f64> = (0..r).map(|_| rng.random_range(-halfwidth..=halfwidth)).collect();
        match geometry {
            Geometry::Hyperbolic => {
                let q = PoincarePoint::new(p).expect("square lies inside the disk");
                data.extend(crate::geometry::from_poincare(&q).into_coords());
            }
            Geometry::Euclidean => data.extend(p),
        }
    }
    Positions::from_flat(n, width, data).expect("consistent shape")
}

fn check_inputs(sample: &LabeledSample, cfg: &FitConfig, r: usize, p: f64) -> Result<()> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::Degenerate("cannot fit an empty sample".into()));
    }
    if r == 0 {
        return Err(Error::Config("latent dimension must be positive".into()));
    }
    if !(p < 0.0) {
        return Err(Error::Config(format!("Hölder exponent must be negative, got {p}")));
    }
    Ok(())
}

/// Fits positions and sparsity parameters to `sample` from a random start.
pub fn fit(
    sample: &LabeledSample,
    cfg: &FitConfig,
    geometry: Geometry,
    r: usize,
    p: f64,
) -> Result<(ModelParams, FitReport)> {
    fit_run(sample, cfg, geometry, r, p, 0)
}

fn fit_run(
    sample: &LabeledSample,
    cfg: &FitConfig,
    geometry: Geometry,
    r: usize,
    p: f64,
    run: usize,
) -> Result<(ModelParams, FitReport)> {
    check_inputs(sample, cfg, r, p)?;
    let mut rng = substream(cfg.seed, Domain::FitStart, run as u64);
    let positions =
        initial_positions(sample.n_nodes(), r, geometry, cfg.init_square_halfwidth, &mut rng);
    let alphas = sample.sizes().map(|k| (k, 0.5)).collect();
    let params = ModelParams::new(positions, alphas, p, geometry)?;
    let (params, mut report) = fit_from(params, sample, cfg)?;
    report.start = run;
    Ok((params, report))
}

/// Runs the blockwise optimization from the given parameters.
pub fn fit_from(
    mut params: ModelParams,
    sample: &LabeledSample,
    cfg: &FitConfig,
) -> Result<(ModelParams, FitReport)> {
    cfg.validate()?;
    if sample.n_nodes() != params.n_nodes() {
        return Err(Error::Dimension {
            expected: params.n_nodes(),
            got: sample.n_nodes(),
        });
    }
    let started = Instant::now();
    for k in sample.sizes() {
        params.alphas.entry(k).or_insert(0.5);
    }
    let incidence = Incidence::build(sample);

    let mut loss = sample_loss(&params, sample)?.total;
    let mut report = FitReport {
        loss_trace: vec![loss],
        alpha_trace: vec![params.alphas.clone()],
        iterations: 0,
        converged: false,
        wall_seconds: 0.0,
        start: 0,
    };

    for _ in 0..cfg.max_iters {
        for k in sample.sizes() {
            let a = update_alpha(&params, sample, k)?;
            params.alphas.insert(k, a);
        }
        let alphas = alpha_table(&params, sample.k_max())?;
        for node in 0..params.n_nodes() {
            let row = move_node(&params, sample, &alphas, &incidence.lists[node], node, cfg);
            params.positions.row_mut(node).copy_from_slice(&row);
        }

        let next = sample_loss(&params, sample)?.total;
        report.iterations += 1;
        report.loss_trace.push(next);
        report.alpha_trace.push(params.alphas.clone());
        let rel = (loss - next).abs() / next.abs().max(1e-30);
        loss = next;
        if rel < cfg.rel_tol {
            report.converged = true;
            break;
        }
    }
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok((params, report))
}

/// Runs `cfg.starts` fits from independent random starts (start `s` uses
/// stream `s` of the seed) and keeps the one with the smallest final loss;
/// ties go to the lowest start index.
pub fn multi_start_fit(
    sample: &LabeledSample,
    cfg: &FitConfig,
    geometry: Geometry,
    r: usize,
    p: f64,
) -> Result<(ModelParams, FitReport)> {
    check_inputs(sample, cfg, r, p)?;
    let run = |s: usize| fit_run(sample, cfg, geometry, r, p, s);
    let results: Vec<Result<(ModelParams, FitReport)>> = if cfg.parallel {
        (0..cfg.starts).into_par_iter().map(run).collect()
    } else {
        (0..cfg.starts).map(run).collect()
    };
    let mut best: Option<(ModelParams, FitReport)> = None;
    for res in results {
        let (params, report) = res?;
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| report.final_loss() < b.final_loss());
        if better {
            best = Some((params, report));
        }
    }
    Ok(best.expect("at least one start"))
}

/// The Lorentz point of `params` for node `i`.
pub fn node_point(params: &ModelParams, i: usize) -> Result<LorentzPoint> {
    LorentzPoint::new(params.positions.row(i).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{Hyperedge, SampleRecord};

    fn two_far_nodes() -> (ModelParams, LabeledSample) {
        let rows = vec![
            LorentzPoint::from_spatial(&[2.0, 0.0]).into_coords(),
            LorentzPoint::from_spatial(&[-2.0, 0.5]).into_coords(),
        ];
        let params = ModelParams::new(
            Positions::from_rows(&rows).unwrap(),
            [(2, 0.8)].into_iter().collect(),
            -20.0,
            Geometry::Hyperbolic,
        )
        .unwrap();
        let mut s = LabeledSample::new(2, 2).unwrap();
        s.push(SampleRecord { edge: Hyperedge::new(vec![0, 1]).unwrap(), z: true, mu: 1.0 })
            .unwrap();
        (params, s)
    }

    #[test]
    fn alpha_bisection() {
        let terms: Vec<(bool, f64, f64)> = (0..10).map(|i| (i < 2, 1.0, 0.5)).collect();
        assert!((solve_alpha(&terms) - 0.4).abs() < 1e-9);
        let pos: Vec<(bool, f64, f64)> = (0..4).map(|_| (true, 0.3, 0.2)).collect();
        assert_eq!(solve_alpha(&pos), 1.0);
        let neg: Vec<(bool, f64, f64)> = (0..4).map(|_| (false, 0.3, 0.2)).collect();
        assert_eq!(solve_alpha(&neg), ALPHA_MIN);
    }

    #[test]
    fn empty_stratum_keeps_alpha() {
        let (params, s) = two_far_nodes();
        let mut params = params;
        params.alphas.insert(3, 0.123);
        let s3 = {
            let mut t = LabeledSample::new(2, 3).unwrap();
            t.extend(LabeledSample::new(2, 3).unwrap()).unwrap();
            for r in s.records() {
                t.push(r.clone()).unwrap();
            }
            t
        };
        assert_eq!(update_alpha(&params, &s3, 3).unwrap(), 0.123);
    }

    #[test]
    fn far_pair_moves_closer() {
        let (params, s) = two_far_nodes();
        let before = sample_loss(&params, &s).unwrap().total;
        let row = update_position(&params, &s, 0, &FitConfig::default()).unwrap();
        let mut moved = params.clone();
        moved.positions.row_mut(0).copy_from_slice(&row);
        let after = sample_loss(&moved, &s).unwrap().total;
        assert!(after < before, "{after} >= {before}");
        assert!((minkowski_dot(&row, &row) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_position() {
        let (params, _) = two_far_nodes();
        let empty = LabeledSample::new(2, 2).unwrap();
        let row = update_position(&params, &empty, 1, &FitConfig::default()).unwrap();
        assert_eq!(row, params.positions.row(1));
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        let bad = FitConfig { rel_tol: 2.0, ..FitConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FitConfig { init_square_halfwidth: 0.9, ..FitConfig::default() };
        assert!(bad.validate().is_err());
    }
}
