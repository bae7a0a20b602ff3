use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hyperloom::eval::{
    curves_by_stratum, distance_to_center, eigenvector_centrality, score_sample, size_k_degrees,
    tv_distance,
};
use hyperloom::hypergraph::{parse_hypergraph, parse_sample, write_hypergraph, write_sample};
use hyperloom::identify::{align_positions, canonicalize, gram, gram_error, sparsity_error};
use hyperloom::io::{
    parse_params, parse_positions, parse_scores, write_params, write_positions, write_scores,
    ParamsHeader,
};
use hyperloom::recovery::{bench_recovery, write_recovery_csv, RecoveryConfig};
use hyperloom::sampling::{case_control_sample, case_control_test_sample, train_test_split};
use hyperloom::simulator::{generate_positions, lift_positions, simulate_with_report};
use hyperloom::{multi_start_fit, DesignConfig, FitConfig, Geometry, ModelParams, SimConfig};

use crate::output::{load, manifest_path, usage, write_atomic, Manifest};

#[derive(Debug, Parser)]
#[command(name = "hyperloom", version, about = "Hyperbolic latent-space models for hypergraphs")]
pub struct Cli {
    /// Allow nondeterministic parallel reductions (faster, not bit-reproducible).
    #[arg(long, global = true)]
    pub fast: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[command(args_override_self = true)]
pub enum Command {
    /// Simulate positions and a hypergraph from the model.
    Simulate(SimulateArgs),
    /// Draw a case-control sample from a hypergraph.
    Sample(SampleArgs),
    /// Split realized hyperedges into training and test hypergraphs.
    Split(SplitArgs),
    /// Fit positions and sparsity parameters to a sample.
    Fit(FitArgs),
    /// Score sampled hyperedges with a fitted model.
    Predict(PredictArgs),
    /// ROC/PR metrics of scored hyperedges.
    Eval(EvalArgs),
    /// Total-variation distance between size-k degree distributions.
    EvalDegrees(EvalDegreesArgs),
    /// Eigenvector centrality of a hypergraph.
    Centrality(CentralityArgs),
    /// Canonical representative of hyperbolic positions.
    Canonicalize(CanonicalizeArgs),
    /// Recovery errors of estimated against true positions.
    GramError(GramErrorArgs),
    /// Parameter-recovery study.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k_max: usize,
    /// Sparsity parameters α_2, …, α_K.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    p: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 30)]
    density_subset: usize,
    #[arg(long, default_value_t = 1000)]
    density_reps: usize,
    #[arg(long, default_value_t = 100_000)]
    mh_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    positions_out: Option<PathBuf>,
    /// Also write the true parameters file.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Hypergraph whose realized hyperedges become the cases.
    #[arg(long)]
    edges: PathBuf,
    /// Full hypergraph the controls must avoid; draws an independent test
    /// design when given.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    controls: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Fraction of each stratum kept for training.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, default_value = "hyperbolic")]
    geometry: Geometry,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_max: f64,
    #[arg(long, default_value_t = 0.1)]
    init_halfwidth: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Metrics CSV; curve points go to `<stem>_curves.csv` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalDegreesArgs {
    #[arg(long)]
    observed: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    simulated: Vec<PathBuf>,
    /// Hyperedge sizes to compare (default: all sizes of the observed file).
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Fitted model directory; adds each node's distance to the center.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CanonicalizeArgs {
    #[arg(long)]
    positions: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GramErrorArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Parameters files for the sparsity errors.
    #[arg(long)]
    est_params: Option<PathBuf>,
    #[arg(long)]
    truth_params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [50usize])]
    n_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10])]
    controls: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    replications: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 5e-4, 5e-6])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    p: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 30)]
    density_subset: usize,
    #[arg(long, default_value_t = 1000)]
    density_reps: usize,
    #[arg(long, default_value_t = 100_000)]
    mh_iters: usize,
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Results CSV; wall times go to `<out>.seconds.csv`.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    let fast = cli.fast;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sample(a) => sample(a),
        Command::Split(a) => split(a),
        Command::Fit(a) => fit(a, fast),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::EvalDegrees(a) => eval_degrees(a),
        Command::Centrality(a) => centrality(a),
        Command::Canonicalize(a) => canonicalize_cmd(a),
        Command::GramError(a) => gram_error_cmd(a),
        Command::Bench(a) => bench(a, fast),
    }
}

fn alpha_map(alpha: &[f64], k_max: Option<usize>) -> Result<BTreeMap<usize, f64>> {
    if let Some(k) = k_max {
        if k < 2 || alpha.len() != k - 1 {
            return Err(usage(format!(
                "--alpha needs {} values for --k-max {k}, got {}",
                k.saturating_sub(1),
                alpha.len()
            )));
        }
    }
    Ok(alpha.iter().enumerate().map(|(i, &a)| (i + 2, a)).collect())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut manifest = Manifest::new("simulate");
    let alphas = alpha_map(&a.alpha, Some(a.k_max))?;
    let cfg = SimConfig {
        gamma: a.gamma,
        rho: a.rho,
        density_subset_size: a.density_subset,
        density_reps: a.density_reps,
        mh_iters: a.mh_iters,
        seed: a.seed,
    };
    let points = generate_positions(a.n, 2, &cfg)?;
    let params = ModelParams::new(lift_positions(&points)?, alphas, a.p, Geometry::Hyperbolic)?;
    let (h, reports) = simulate_with_report(&params, &cfg)?;

    write_atomic(&a.out, |w| write_hypergraph(&h, w))?;
    if let Some(path) = &a.positions_out {
        write_atomic(path, |w| write_positions(&params.positions, params.geometry, w))?;
    }
    if let Some(path) = &a.params_out {
        write_atomic(path, |w| write_params(&params, w))?;
    }
    manifest
        .set("n", a.n)
        .set("k-max", a.k_max)
        .set("alpha", join(&a.alpha))
        .set("p", a.p)
        .set("gamma", a.gamma)
        .set("rho", a.rho)
        .set("density-subset", a.density_subset)
        .set("density-reps", a.density_reps)
        .set("mh-iters", a.mh_iters)
        .set("seed", a.seed);
    for r in &reports {
        manifest.set(
            &format!("stratum_{}", r.k),
            format!(
                "rho_hat={:e} lambda={:e} drawn={} realized={}",
                r.rho_hat, r.lambda, r.drawn, r.realized
            ),
        );
    }
    manifest.write(&manifest_path(&a.out))
}

fn sample(a: SampleArgs) -> Result<()> {
    let h = load(&a.edges, parse_hypergraph)?;
    let design = DesignConfig::new(a.controls, a.seed)?;
    let s = match &a.exclude {
        Some(full) => {
            let full = load(full, parse_hypergraph)?;
            case_control_test_sample(&h, &full, &design)?
        }
        None => case_control_sample(&h, &design)?,
    };
    write_atomic(&a.out, |w| write_sample(&s, w))?;
    let mut m = Manifest::new("sample");
    m.set("edges", a.edges.display())
        .set("controls", a.controls)
        .set("seed", a.seed)
        .set("records", s.len());
    if let Some(x) = &a.exclude {
        m.set("exclude", x.display());
    }
    m.write(&manifest_path(&a.out))
}

fn split(a: SplitArgs) -> Result<()> {
    let h = load(&a.edges, parse_hypergraph)?;
    let (train, test) = train_test_split(&h, a.split, a.seed)?;
    write_atomic(&a.train_out, |w| write_hypergraph(&train, w))?;
    write_atomic(&a.test_out, |w| write_hypergraph(&test, w))?;
    Manifest::new("split")
        .set("edges", a.edges.display())
        .set("split", a.split)
        .set("seed", a.seed)
        .set("train_edges", train.num_edges())
        .set("test_edges", test.num_edges())
        .write(&manifest_path(&a.train_out))
}

fn fit(a: FitArgs, fast: bool) -> Result<()> {
    let sample = load(&a.sample, parse_sample)?;
    let cfg = FitConfig {
        max_iters: a.max_iter,
        rel_tol: a.tol,
        eta_max: a.eta_max,
        starts: a.starts,
        init_square_halfwidth: a.init_halfwidth,
        seed: a.seed,
        parallel: fast,
        ..FitConfig::default()
    };
    let (params, report) = multi_start_fit(&sample, &cfg, a.geometry, a.dim, a.p)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_atomic(&a.out.join("positions.tsv"), |w| {
        write_positions(&params.positions, params.geometry, w)
    })?;
    write_atomic(&a.out.join("params.tsv"), |w| write_params(&params, w))?;
    write_atomic(&a.out.join("fit_report.csv"), |w| {
        let sizes: Vec<usize> = params.alphas.keys().copied().collect();
        write!(w, "iteration,loss")?;
        for k in &sizes {
            write!(w, ",alpha_{k}")?;
        }
        writeln!(w)?;
        for (t, (loss, alphas)) in report.loss_trace.iter().zip(&report.alpha_trace).enumerate() {
            write!(w, "{t},{loss:e}")?;
            for k in &sizes {
                write!(w, ",{:e}", alphas.get(k).copied().unwrap_or(f64::NAN))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Manifest::new("fit")
        .set("sample", a.sample.display())
        .set("geometry", a.geometry)
        .set("dim", a.dim)
        .set("p", a.p)
        .set("starts", a.starts)
        .set("max-iter", a.max_iter)
        .set("tol", a.tol)
        .set("eta-max", a.eta_max)
        .set("init-halfwidth", a.init_halfwidth)
        .set("seed", a.seed)
        .set("fast", fast)
        .set("selected_start", report.start)
        .set("iterations", report.iterations)
        .set("converged", report.converged)
        .set("final_loss", format!("{:e}", report.final_loss()))
        .write(&a.out.join("manifest.txt"))
}

/// Reads `dir/params.tsv` and `dir/positions.tsv`.
fn load_model(dir: &Path) -> Result<ModelParams> {
    let header = load(&dir.join("params.tsv"), parse_params)?;
    let (positions, geometry) = load(&dir.join("positions.tsv"), parse_positions)?;
    if geometry != header.geometry {
        return Err(usage(format!(
            "{}: positions are {geometry} but parameters are {}",
            dir.display(),
            header.geometry
        )));
    }
    Ok(header.with_positions(positions)?)
}

fn predict(a: PredictArgs) -> Result<()> {
    let params = load_model(&a.params)?;
    let sample = load(&a.sample, parse_sample)?;
    let scores = score_sample(&params, &sample)?;
    write_atomic(&a.out, |w| write_scores(&scores, w))?;
    Manifest::new("predict")
        .set("params", a.params.display())
        .set("sample", a.sample.display())
        .write(&manifest_path(&a.out))
}

fn curves_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_curves.csv"))
}

fn eval(a: EvalArgs) -> Result<()> {
    let scores = load(&a.scores, parse_scores)?;
    let curves = curves_by_stratum(&scores)?;
    let label = |k: usize| if k == 0 { "pooled".to_string() } else { k.to_string() };
    write_atomic(&a.out, |w| {
        writeln!(w, "stratum,auc_roc,auc_pr,n_pos,n_neg")?;
        for (&k, c) in curves.iter().filter(|(&k, _)| k != 0).chain(curves.get_key_value(&0)) {
            writeln!(w, "{},{:e},{:e},{},{}", label(k), c.auc_roc, c.auc_pr, c.n_pos, c.n_neg)?;
        }
        Ok(())
    })?;
    let cpath = curves_path(&a.out);
    write_atomic(&cpath, |w| {
        writeln!(w, "stratum,curve,x,y")?;
        for (&k, c) in &curves {
            for (x, y) in &c.roc {
                writeln!(w, "{},roc,{x:e},{y:e}", label(k))?;
            }
            for (x, y) in &c.pr {
                writeln!(w, "{},pr,{x:e},{y:e}", label(k))?;
            }
        }
        Ok(())
    })?;
    Manifest::new("eval")
        .set("scores", a.scores.display())
        .set("curves", cpath.display())
        .write(&manifest_path(&a.out))
}

fn eval_degrees(a: EvalDegreesArgs) -> Result<()> {
    let observed = load(&a.observed, parse_hypergraph)?;
    let sizes: Vec<usize> = if a.k.is_empty() { observed.sizes().collect() } else { a.k.clone() };
    let mut rows = Vec::new();
    for (i, path) in a.simulated.iter().enumerate() {
        let sim = load(path, parse_hypergraph)?;
        if sim.n_nodes() != observed.n_nodes() {
            return Err(usage(format!(
                "{} has {} nodes, the observed hypergraph {}",
                path.display(),
                sim.n_nodes(),
                observed.n_nodes()
            )));
        }
        for &k in &sizes {
            let tv = tv_distance(&size_k_degrees(&observed, k), &size_k_degrees(&sim, k))?;
            rows.push((i, k, tv));
        }
    }
    write_atomic(&a.out, |w| {
        writeln!(w, "simulation,k,tv_distance")?;
        for (i, k, tv) in &rows {
            writeln!(w, "{i},{k},{tv:e}")?;
        }
        for &k in &sizes {
            let vals: Vec<f64> = rows.iter().filter(|r| r.1 == k).map(|r| r.2).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            writeln!(w, "mean,{k},{mean:e}")?;
        }
        Ok(())
    })?;
    Manifest::new("eval-degrees")
        .set("observed", a.observed.display())
        .set(
            "simulated",
            a.simulated.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
        )
        .set("k", join(&sizes))
        .write(&manifest_path(&a.out))
}

fn centrality(a: CentralityArgs) -> Result<()> {
    let h = load(&a.edges, parse_hypergraph)?;
    let c = eigenvector_centrality(&h)?;
    let dist = match &a.params {
        Some(dir) => {
            let params = load_model(dir)?;
            if params.n_nodes() != h.n_nodes() {
                return Err(usage("model and hypergraph have different node counts"));
            }
            Some(distance_to_center(&params))
        }
        None => None,
    };
    write_atomic(&a.out, |w| {
        write!(w, "node\tcentrality")?;
        if dist.is_some() {
            write!(w, "\tdistance_to_center")?;
        }
        writeln!(w)?;
        for (i, v) in c.iter().enumerate() {
            write!(w, "{i}\t{v:.16e}")?;
            if let Some(d) = &dist {
                write!(w, "\t{:.16e}", d[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let mut m = Manifest::new("centrality");
    m.set("edges", a.edges.display());
    if let Some(p) = &a.params {
        m.set("params", p.display());
    }
    m.write(&manifest_path(&a.out))
}

fn hyperbolic_positions(path: &Path) -> Result<hyperloom::Positions> {
    let (positions, geometry) = load(path, parse_positions)?;
    if geometry != Geometry::Hyperbolic {
        return Err(usage(format!("{} does not hold hyperbolic positions", path.display())));
    }
    Ok(positions)
}

fn canonicalize_cmd(a: CanonicalizeArgs) -> Result<()> {
    let positions = hyperbolic_positions(&a.positions)?;
    let r = positions.width() - 1;
    let c = canonicalize(&gram(&positions)?, r)?;
    write_atomic(&a.out, |w| write_positions(&c, Geometry::Hyperbolic, w))?;
    Manifest::new("canonicalize")
        .set("positions", a.positions.display())
        .write(&manifest_path(&a.out))
}

fn gram_error_cmd(a: GramErrorArgs) -> Result<()> {
    let est = hyperbolic_positions(&a.est)?;
    let truth = hyperbolic_positions(&a.truth)?;
    if est.len() != truth.len() || est.width() != truth.width() {
        return Err(usage("estimated and true positions differ in shape"));
    }
    let ge = gram_error(&gram(&est)?, &gram(&truth)?)?;
    let aligned = align_positions(&est, &truth)?.residual;
    let alpha_err = match (&a.est_params, &a.truth_params) {
        (Some(e), Some(t)) => {
            let e: ParamsHeader = load(e, parse_params)?;
            let t: ParamsHeader = load(t, parse_params)?;
            sparsity_error(&e.alphas, &t.alphas)?
        }
        (None, None) => BTreeMap::new(),
        _ => return Err(usage("--est-params and --truth-params go together")),
    };
    write_atomic(&a.out, |w| {
        write!(w, "gram_error,aligned_position_error")?;
        for k in alpha_err.keys() {
            write!(w, ",alpha_rel_error_{k}")?;
        }
        writeln!(w)?;
        write!(w, "{ge:e},{aligned:e}")?;
        for v in alpha_err.values() {
            write!(w, ",{v:e}")?;
        }
        writeln!(w)?;
        Ok(())
    })?;
    Manifest::new("gram-error")
        .set("est", a.est.display())
        .set("truth", a.truth.display())
        .write(&manifest_path(&a.out))
}

fn bench(a: BenchArgs, fast: bool) -> Result<()> {
    let cfg = RecoveryConfig {
        cells: RecoveryConfig::grid(&a.n_values, &a.controls),
        replications: a.replications,
        alphas: alpha_map(&a.alpha, None)?,
        p: a.p,
        sim: SimConfig {
            gamma: a.gamma,
            rho: a.rho,
            density_subset_size: a.density_subset,
            density_reps: a.density_reps,
            mh_iters: a.mh_iters,
            seed: 0,
        },
        fit: FitConfig {
            max_iters: a.max_iter,
            rel_tol: a.tol,
            starts: a.starts,
            parallel: fast,
            ..FitConfig::default()
        },
        seed: a.seed,
    };
    let rows = bench_recovery(&cfg)?;
    write_atomic(&a.out, |w| write_recovery_csv(&rows, false, w))?;
    let mut seconds = a.out.as_os_str().to_owned();
    seconds.push(".seconds.csv");
    write_atomic(Path::new(&seconds), |w| {
        writeln!(w, "replication,n_nodes,n_controls,seconds")?;
        for r in &rows {
            writeln!(w, "{},{},{},{:.3}", r.replication, r.n_nodes, r.n_controls, r.seconds)?;
        }
        Ok(())
    })?;
    Manifest::new("bench")
        .set("n-values", join(&a.n_values))
        .set("controls", join(&a.controls))
        .set("replications", a.replications)
        .set("alpha", join(&a.alpha))
        .set("p", a.p)
        .set("gamma", a.gamma)
        .set("rho", a.rho)
        .set("density-subset", a.density_subset)
        .set("density-reps", a.density_reps)
        .set("mh-iters", a.mh_iters)
        .set("starts", a.starts)
        .set("max-iter", a.max_iter)
        .set("tol", a.tol)
        .set("seed", a.seed)
        .set("fast", fast)
        .write(&manifest_path(&a.out))
}
