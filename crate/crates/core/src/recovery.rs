//! Parameter-recovery study: simulate from known parameters, sample, fit and
//! measure how far the estimate lands from the truth.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{multi_start_fit, FitConfig};
use crate::hypergraph::Hypergraph;
use crate::identify::{align_positions, gram, gram_error, sparsity_error};
use crate::model::{Geometry, ModelParams};
use crate::rng::{child_seed, Domain};
use crate::sampling::{case_control_sample, DesignConfig};
use crate::simulator::{generate_positions, lift_positions, simulate_hypergraph, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    /// `(N, controls per case)` pairs; cells sharing `N` within a
    /// replication share one simulated hypergraph.
    pub cells: Vec<(usize, usize)>,
    pub replications: usize,
    pub alphas: BTreeMap<usize, f64>,
    pub p: f64,
    /// Radial law and simulation settings; `sim.seed` is ignored.
    pub sim: SimConfig,
    /// Fit settings; `fit.seed` is ignored.
    pub fit: FitConfig,
    pub seed: u64,
}

impl RecoveryConfig {
    /// Every combination of the given sizes and control counts.
    pub fn grid(n_values: &[usize], controls: &[usize]) -> Vec<(usize, usize)> {
        n_values
            .iter()
            .flat_map(|&n| controls.iter().map(move |&c| (n, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub replication: usize,
    pub n_nodes: usize,
    pub n_controls: usize,
    /// Realized hyperedges per size in the simulated hypergraph.
    pub edges: BTreeMap<usize, usize>,
    pub gram_error: f64,
    pub position_error: f64,
    pub alpha_error: BTreeMap<usize, f64>,
    pub final_loss: f64,
    pub iterations: usize,
    pub seconds: f64,
}

fn data_seed(seed: u64, replication: usize, n: usize) -> u64 {
    child_seed(seed, Domain::Replication, ((replication as u64) << 32) | n as u64)
}

/// Simulates the true model for one replication and size.
pub fn simulate_truth(
    cfg: &RecoveryConfig,
    replication: usize,
    n: usize,
) -> Result<(ModelParams, Hypergraph)> {
    let seed = data_seed(cfg.seed, replication, n);
    let sim = SimConfig { seed, ..cfg.sim.clone() };
    let points = generate_positions(n, 2, &sim)?;
    let truth = ModelParams::new(
        lift_positions(&points)?,
        cfg.alphas.clone(),
        cfg.p,
        Geometry::Hyperbolic,
    )?;
    let h = simulate_hypergraph(&truth, &sim)?;
    Ok((truth, h))
}

fn run_cell(
    cfg: &RecoveryConfig,
    replication: usize,
    truth: &ModelParams,
    h: &Hypergraph,
    n_controls: usize,
) -> Result<RecoveryRow> {
    let started = Instant::now();
    let n = truth.n_nodes();
    let seed = data_seed(cfg.seed, replication, n);
    let design = DesignConfig::new(n_controls, child_seed(seed, Domain::Controls, n_controls as u64))?;
    let sample = case_control_sample(h, &design)?;
    let fit_cfg = FitConfig {
        seed: child_seed(seed, Domain::FitStart, n_controls as u64),
        ..cfg.fit.clone()
    };
    let (fitted, report) = multi_start_fit(&sample, &fit_cfg, Geometry::Hyperbolic, 2, cfg.p)?;
    let gram_err = gram_error(&gram(&fitted.positions)?, &gram(&truth.positions)?)?;
    let position_error = align_positions(&fitted.positions, &truth.positions)?.residual;
    Ok(RecoveryRow {
        replication,
        n_nodes: n,
        n_controls,
        edges: h.sizes().map(|k| (k, h.stratum_len(k))).collect(),
        gram_error: gram_err,
        position_error,
        alpha_error: sparsity_error(&fitted.alphas, &truth.alphas)?,
        final_loss: report.final_loss(),
        iterations: report.iterations,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs every replication over every cell. Rows come out ordered by
/// replication, then cell.
pub fn bench_recovery(cfg: &RecoveryConfig) -> Result<Vec<RecoveryRow>> {
    if cfg.cells.is_empty() || cfg.replications == 0 {
        return Err(Error::Config("recovery study needs cells and replications".into()));
    }
    if cfg.alphas.keys().any(|&k| k < 2) {
        return Err(Error::Config("sparsity sizes must be >= 2".into()));
    }
    let per_rep: Vec<Result<Vec<RecoveryRow>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rows = Vec::with_capacity(cfg.cells.len());
            let mut cache: Option<(usize, ModelParams, Hypergraph)> = None;
            for &(n, c) in &cfg.cells {
                if cache.as_ref().map_or(true, |(m, _, _)| *m != n) {
                    let (truth, h) = simulate_truth(cfg, rep, n)?;
                    cache = Some((n, truth, h));
                }
                let (_, truth, h) = cache.as_ref().expect("filled above");
                rows.push(run_cell(cfg, rep, truth, h, c)?);
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_rep {
        out.extend(rows?);
    }
    Ok(out)
}

/// Writes the rows as CSV. Wall time is left out unless `with_seconds`, so
/// the default output is reproducible byte for byte.
pub fn write_recovery_csv<W: Write>(rows: &[RecoveryRow], with_seconds: bool, mut out: W) -> Result<()> {
    let sizes: Vec<usize> = rows
        .first()
        .map(|r| r.edges.keys().copied().collect())
        .unwrap_or_default();
    write!(out, "replication,n_nodes,n_controls")?;
    for k in &sizes {
        write!(out, ",edges_{k}")?;
    }
    write!(out, ",gram_error,position_error")?;
    for k in &sizes {
        write!(out, ",alpha_rel_error_{k}")?;
    }
    write!(out, ",final_loss,iterations")?;
    if with_seconds {
        write!(out, ",seconds")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{},{},{}", r.replication, r.n_nodes, r.n_controls)?;
        for k in &sizes {
            write!(out, ",{}", r.edges.get(k).copied().unwrap_or(0))?;
        }
        write!(out, ",{:e},{:e}", r.gram_error, r.position_error)?;
        for k in &sizes {
            match r.alpha_error.get(k) {
                Some(v) => write!(out, ",{v:e}")?,
                None => write!(out, ",")?,
            }
        }
        write!(out, ",{:e},{}", r.final_loss, r.iterations)?;
        if with_seconds {
            write!(out, ",{:.3}", r.seconds)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
