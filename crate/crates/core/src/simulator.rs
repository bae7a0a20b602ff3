//! Hypergraph simulation.
//!
//! Each stratum `k` is simulated in three steps:
//!
//! 1. The mean hyperedge probability `ρ_k` is estimated on random subsets of
//!    `S` units and the number of realized hyperedges is drawn as
//!    `U_k ~ Poisson(ρ̂_k · C(N, k))`.
//! 2. `U_k` distinct hyperedges are placed by acceptance-rejection: a uniform
//!    candidate `e` is accepted with probability `σ(−g(Θ_e))`.
//! 3. A Metropolis–Hastings chain over edge sets (shuffle, addition and
//!    deletion moves) refines the result toward the exact product-Bernoulli
//!    law.
//!
//! [`exact_simulate`] flips every hyperedge independently and serves as the
//! small-`N` reference.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{from_poincare, PoincarePoint};
use crate::hypergraph::{
    binomial, binomial_f64, enumerate_hyperedges, for_each_combination, ln_binomial, Hyperedge,
    Hypergraph,
};
use crate::model::{edge_concentration, holder_mean, sigma, EdgeScratch, ModelParams, Positions};
use crate::rng::{substream, Domain, Rng};
use crate::sampling::random_k_subset;

/// Largest Poisson mean accepted for an edge count.
pub const MAX_EDGE_COUNT_MEAN: f64 = 1e9;

/// Proposals allowed in one rejection-sampling call.
pub const MAX_PROPOSALS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Rate of the radial law of generated positions.
    pub gamma: f64,
    /// Largest Poincaré radius of generated positions.
    pub rho: f64,
    /// Units per subset when estimating the mean density.
    pub density_subset_size: usize,
    pub density_reps: usize,
    /// Metropolis–Hastings steps per stratum.
    pub mh_iters: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gamma: 3.0,
            rho: 0.5,
            density_subset_size: 30,
            density_reps: 1000,
            mh_iters: 100_000,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if self.density_subset_size < 2 || self.density_reps == 0 {
            return Err(Error::Config(
                "density estimation needs a subset size >= 2 and at least one repetition".into(),
            ));
        }
        Ok(())
    }
}

/// Inverse CDF of the radial law with density `γ sinh(γz) / (cosh(γρ) − 1)`
/// on `[0, ρ]`.
pub fn radial_quantile(u: f64, gamma: f64, rho: f64) -> f64 {
    let c = (gamma * rho).cosh() - 1.0;
    ((c * u + 1.0).acosh() / gamma).clamp(0.0, rho)
}

/// CDF of the radial law.
pub fn radial_cdf(z: f64, gamma: f64, rho: f64) -> f64 {
    let z = z.clamp(0.0, rho);
    ((gamma * z).cosh() - 1.0) / ((gamma * rho).cosh() - 1.0)
}

/// `n` points of the Poincaré disk with radial law [`radial_quantile`] and
/// uniform angle. Only `r = 2` is supported.
pub fn generate_positions(n: usize, r: usize, cfg: &SimConfig) -> Result<Vec<PoincarePoint>> {
    if r != 2 {
        return Err(Error::Unsupported(format!(
            "position synthesis is only defined for r = 2, got r = {r}"
        )));
    }
    if n == 0 {
        return Err(Error::Config("need at least one unit".into()));
    }
    cfg.validate()?;
    let mut rng = substream(cfg.seed, Domain::Positions, 0);
    (0..n)
        .map(|_| {
            let z = radial_quantile(rng.random::<f64>(), cfg.gamma, cfg.rho);
            let angle = rng.random::<f64>() * 2.0 * PI;
            PoincarePoint::new(vec![z * angle.cos(), z * angle.sin()])
        })
        .collect()
}

/// Lifts Poincaré points onto the hyperboloid.
pub fn lift_positions(points: &[PoincarePoint]) -> Result<Positions> {
    let rows: Vec<Vec<f64>> = points.iter().map(|p| from_poincare(p).into_coords()).collect();
    Positions::from_rows(&rows)
}

fn check_stratum(params: &ModelParams, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain(format!("hyperedge size must be >= 2, got {k}")));
    }
    params.alpha(k)
}

/// Monte-Carlo estimate of the mean probability of size-`k` hyperedges.
///
/// Each repetition draws `S` units without replacement and averages `π` over
/// all `C(S, k)` hyperedges among them. With `S >= N` a single exact pass is
/// made.
pub fn estimate_mean_density(
    params: &ModelParams,
    k: usize,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<f64> {
    let alpha = check_stratum(params, k)?;
    let n = params.n_nodes();
    let s = cfg.density_subset_size.min(n);
    if binomial(s, k) == Some(0) {
        return Err(Error::domain(format!("no size-{k} hyperedges among {s} units")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let reps = if s == n { 1 } else { cfg.density_reps };
    let pos = &params.positions;
    let mut dist = vec![0.0; s * s];
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for _ in 0..reps {
        let units: Vec<usize> = if s == n {
            (0..n).collect()
        } else {
            let mut u = index::sample(rng, n, s).into_vec();
            u.sort_unstable();
            u
        };
        // Pairwise distances among the subset, shared by all its hyperedges.
        for a in 0..s {
            for b in a + 1..s {
                let d = params.geometry.distance(pos.row(units[a]), pos.row(units[b]));
                dist[a * s + b] = d;
                dist[b * s + a] = d;
            }
        }
        let (mut sum, mut count) = (0.0, 0u64);
        for_each_combination(s, k, |c| {
            for (slot, &a) in sums.iter_mut().zip(c) {
                *slot = c.iter().map(|&b| dist[a * s + b]).sum();
            }
            sum += sigma(-holder_mean(&sums, params.p));
            count += 1;
        });
        total += sum / count as f64;
    }
    Ok(alpha * (total / reps as f64))
}

/// Poisson mean `ρ̂_k · C(n, k)`, computed in log space.
pub fn edge_count_mean(rho_hat: f64, n: usize, k: usize) -> Result<f64> {
    if !(rho_hat >= 0.0 && rho_hat <= 1.0) {
        return Err(Error::domain(format!("mean density must lie in [0, 1], got {rho_hat}")));
    }
    if rho_hat == 0.0 || k > n {
        return Ok(0.0);
    }
    let ln_lambda = rho_hat.ln() + ln_binomial(n, k);
    if ln_lambda > MAX_EDGE_COUNT_MEAN.ln() {
        return Err(Error::Capacity(format!(
            "expected size-{k} edge count e^{ln_lambda:.1} exceeds {MAX_EDGE_COUNT_MEAN:e}"
        )));
    }
    Ok(ln_lambda.exp())
}

/// Draws `U_k ~ Poisson(ρ̂_k · C(n, k))`, capped at `C(n, k)`.
pub fn draw_edge_count(rho_hat: f64, n: usize, k: usize, rng: &mut Rng) -> Result<u64> {
    let lambda = edge_count_mean(rho_hat, n, k)?;
    if lambda == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::domain(format!("invalid Poisson mean {lambda}: {e}")))?;
    let u = poisson.sample(rng) as u64;
    Ok(match binomial(n, k) {
        Some(total) => u.min(total),
        None => u,
    })
}

/// Output of [`rejection_sample_edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraw {
    /// Accepted hyperedges in acceptance order.
    pub edges: Vec<Hyperedge>,
    pub proposals: u64,
}

/// Draws `u_k` distinct size-`k` hyperedges: uniform candidates accepted with
/// probability `σ(−g(Θ_e))`, accepted duplicates redrawn.
pub fn rejection_sample_edges(
    params: &ModelParams,
    k: usize,
    u_k: u64,
    rng: &mut Rng,
) -> Result<RejectionDraw> {
    check_stratum(params, k)?;
    let n = params.n_nodes();
    if binomial(n, k).is_some_and(|total| u_k > total) {
        return Err(Error::domain(format!(
            "cannot place {u_k} distinct size-{k} hyperedges on {n} nodes"
        )));
    }
    let mut state = EdgeSet::new(n, k)?;
    let mut scratch = EdgeScratch::default();
    let mut proposals = 0u64;
    while (state.len() as u64) < u_k {
        if proposals >= MAX_PROPOSALS {
            return Err(Error::Progress(format!(
                "{proposals} proposals placed only {} of {u_k} size-{k} hyperedges",
                state.len()
            )));
        }
        proposals += 1;
        let nodes = random_k_subset(rng, n, k);
        let accept = sigma(-edge_concentration(params, &nodes, &mut scratch));
        // Always consume the uniform so the stream does not depend on σ.
        let u: f64 = rng.random();
        if u < accept {
            let e = Hyperedge::from_sorted(nodes);
            if !state.contains(&e) {
                state.insert(e);
            }
        }
    }
    Ok(RejectionDraw {
        edges: state.edges,
        proposals,
    })
}

/// A set of distinct size-`k` hyperedges with O(1) uniform selection,
/// insertion and removal.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    n: usize,
    k: usize,
    /// `C(n, k)`.
    total: f64,
    edges: Vec<Hyperedge>,
    index: HashMap<Hyperedge, usize>,
}

impl EdgeSet {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::domain(format!("need 2 <= k <= n, got k={k}, n={n}")));
        }
        Ok(Self {
            n,
            k,
            total: binomial_f64(n, k),
            edges: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn from_edges(n: usize, k: usize, edges: impl IntoIterator<Item = Hyperedge>) -> Result<Self> {
        let mut s = Self::new(n, k)?;
        for e in edges {
            if e.len() != k || e.nodes().last().is_some_and(|&v| v >= n) {
                return Err(Error::domain(format!("hyperedge {e} does not fit stratum {k} on {n} nodes")));
            }
            if s.contains(&e) {
                return Err(Error::domain(format!("duplicate hyperedge {e}")));
            }
            s.insert(e);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of possible size-`k` hyperedges.
    pub fn capacity(&self) -> f64 {
        self.total
    }

    pub fn contains(&self, e: &Hyperedge) -> bool {
        self.index.contains_key(e)
    }

    /// Present hyperedges in internal order.
    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    fn insert(&mut self, e: Hyperedge) {
        self.index.insert(e.clone(), self.edges.len());
        self.edges.push(e);
    }

    fn remove(&mut self, e: &Hyperedge) {
        let i = self.index.remove(e).expect("edge present");
        self.edges.swap_remove(i);
        if i < self.edges.len() {
            *self.index.get_mut(&self.edges[i]).expect("moved edge indexed") = i;
        }
    }

    fn pick_present(&self, rng: &mut Rng) -> Hyperedge {
        self.edges[rng.random_range(0..self.edges.len())].clone()
    }

    /// Uniform absent hyperedge by rejection; requires `len < capacity`.
    fn pick_absent(&self, rng: &mut Rng) -> Hyperedge {
        loop {
            let e = Hyperedge::from_sorted(random_k_subset(rng, self.n, self.k));
            if !self.contains(&e) {
                return e;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhMove {
    /// Swap one present hyperedge for one absent hyperedge.
    Shuffle,
    Add,
    Delete,
}

/// One Metropolis–Hastings step as performed by [`mh_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct MhTransition {
    pub kind: MhMove,
    /// Edge set size before the step.
    pub m: usize,
    /// The hyperedge proposed for addition, if any.
    pub added: Option<Hyperedge>,
    /// The hyperedge proposed for deletion, if any.
    pub deleted: Option<Hyperedge>,
    pub acceptance: f64,
    pub accepted: bool,
}

/// Probability that [`mh_step`] proposes one specific move of this kind from
/// a state with `m` of `total` hyperedges present (0 if infeasible).
pub fn mh_proposal_probability(kind: MhMove, m: usize, total: f64) -> f64 {
    let m = m as f64;
    let absent = total - m;
    let p = match kind {
        MhMove::Shuffle if m > 0.0 && absent > 0.0 => 1.0 / (m * absent),
        MhMove::Add if absent > 0.0 => 1.0 / absent,
        MhMove::Delete if m > 0.0 => 1.0 / m,
        _ => 0.0,
    };
    p / 3.0
}

/// Acceptance probability of a move from a state with `m` of `total`
/// hyperedges present. `pi_add` and `pi_del` are the probabilities of the
/// added and deleted hyperedges (ignored when the move has none).
pub fn mh_acceptance(kind: MhMove, pi_add: f64, pi_del: f64, m: usize, total: f64) -> f64 {
    let m = m as f64;
    let (num, den) = match kind {
        MhMove::Shuffle => (pi_add * (1.0 - pi_del), pi_del * (1.0 - pi_add)),
        MhMove::Add => (pi_add * (total - m), (1.0 - pi_add) * (m + 1.0)),
        MhMove::Delete => ((1.0 - pi_del) * m, pi_del * (total - m + 1.0)),
    };
    if num >= den {
        1.0
    } else {
        num / den
    }
}

struct StratumModel<'a> {
    params: &'a ModelParams,
    alpha: f64,
    scratch: EdgeScratch,
}

impl<'a> StratumModel<'a> {
    fn new(params: &'a ModelParams, k: usize) -> Result<Self> {
        Ok(Self {
            params,
            alpha: check_stratum(params, k)?,
            scratch: EdgeScratch::default(),
        })
    }

    fn pi(&mut self, e: &Hyperedge) -> f64 {
        self.alpha * sigma(-edge_concentration(self.params, e.nodes(), &mut self.scratch))
    }

    fn step(&mut self, state: &mut EdgeSet, rng: &mut Rng) -> MhTransition {
        let kind = match rng.random_range(0..3u8) {
            0 => MhMove::Shuffle,
            1 => MhMove::Add,
            _ => MhMove::Delete,
        };
        let m = state.len();
        let mut t = MhTransition {
            kind,
            m,
            added: None,
            deleted: None,
            acceptance: 0.0,
            accepted: false,
        };
        if mh_proposal_probability(kind, m, state.total) == 0.0 {
            return t;
        }
        if kind != MhMove::Delete {
            t.added = Some(state.pick_absent(rng));
        }
        if kind != MhMove::Add {
            t.deleted = Some(state.pick_present(rng));
        }
        let pa = t.added.as_ref().map_or(0.0, |e| self.pi(e));
        let pd = t.deleted.as_ref().map_or(0.0, |e| self.pi(e));
        t.acceptance = mh_acceptance(kind, pa, pd, m, state.total);
        let u: f64 = rng.random();
        if u < t.acceptance {
            t.accepted = true;
            if let Some(d) = &t.deleted {
                state.remove(d);
            }
            if let Some(a) = &t.added {
                state.insert(a.clone());
            }
        }
        t
    }
}

/// One Metropolis–Hastings step on a size-`k` edge set. The move type is
/// uniform over shuffle, addition and deletion; an infeasible move counts as
/// a rejected step.
pub fn mh_step(
    state: &mut EdgeSet,
    params: &ModelParams,
    k: usize,
    rng: &mut Rng,
) -> Result<MhTransition> {
    if state.k != k || state.n != params.n_nodes() {
        return Err(Error::domain("edge set does not match the stratum"));
    }
    Ok(StratumModel::new(params, k)?.step(state, rng))
}

/// Runs `steps` Metropolis–Hastings steps and returns the number accepted.
pub fn run_mh(
    state: &mut EdgeSet,
    params: &ModelParams,
    k: usize,
    steps: usize,
    rng: &mut Rng,
) -> Result<usize> {
    if state.k != k || state.n != params.n_nodes() {
        return Err(Error::domain("edge set does not match the stratum"));
    }
    let mut model = StratumModel::new(params, k)?;
    Ok((0..steps).filter(|_| model.step(state, rng).accepted).count())
}

/// Summary of one simulated stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumReport {
    pub k: usize,
    pub rho_hat: f64,
    pub lambda: f64,
    /// Poisson draw `U_k`.
    pub drawn: u64,
    pub proposals: u64,
    pub mh_accepted: usize,
    /// Realized hyperedges after the chain.
    pub realized: usize,
}

/// Simulates stratum `k` on the given stream.
pub fn simulate_stratum(
    params: &ModelParams,
    k: usize,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<(Vec<Hyperedge>, StratumReport)> {
    let n = params.n_nodes();
    let mut report = StratumReport {
        k,
        rho_hat: 0.0,
        lambda: 0.0,
        drawn: 0,
        proposals: 0,
        mh_accepted: 0,
        realized: 0,
    };
    if k > n || check_stratum(params, k)? == 0.0 {
        return Ok((Vec::new(), report));
    }
    report.rho_hat = estimate_mean_density(params, k, cfg, rng)?;
    report.lambda = edge_count_mean(report.rho_hat, n, k)?;
    report.drawn = draw_edge_count(report.rho_hat, n, k, rng)?;
    let draw = rejection_sample_edges(params, k, report.drawn, rng)?;
    report.proposals = draw.proposals;
    let mut state = EdgeSet::from_edges(n, k, draw.edges)?;
    report.mh_accepted = run_mh(&mut state, params, k, cfg.mh_iters, rng)?;
    report.realized = state.len();
    Ok((state.edges, report))
}

/// Simulates every stratum with a sparsity parameter; stratum `k` uses its
/// own stream, so strata run concurrently without affecting the output.
pub fn simulate_with_report(
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<(Hypergraph, Vec<StratumReport>)> {
    cfg.validate()?;
    let k_max = params.k_max();
    let mut h = Hypergraph::new(params.n_nodes(), k_max)?;
    let sizes: Vec<usize> = params.alphas.keys().copied().filter(|&k| k >= 2).collect();
    let strata: Vec<Result<(Vec<Hyperedge>, StratumReport)>> = sizes
        .par_iter()
        .map(|&k| {
            let mut rng = substream(cfg.seed, Domain::SimulateStratum, k as u64);
            simulate_stratum(params, k, cfg, &mut rng)
        })
        .collect();
    let mut reports = Vec::with_capacity(strata.len());
    for res in strata {
        let (edges, report) = res?;
        for e in edges {
            h.insert(e)?;
        }
        reports.push(report);
    }
    Ok((h, reports))
}

pub fn simulate_hypergraph(params: &ModelParams, cfg: &SimConfig) -> Result<Hypergraph> {
    simulate_with_report(params, cfg).map(|(h, _)| h)
}

/// Enumerates every hyperedge and realizes it with probability `π(e)`.
pub fn exact_simulate(params: &ModelParams, seed: u64) -> Result<Hypergraph> {
    let n = params.n_nodes();
    let mut h = Hypergraph::new(n, params.k_max())?;
    let mut scratch = EdgeScratch::default();
    for (&k, &alpha) in &params.alphas {
        if k > n {
            continue;
        }
        let mut rng = substream(seed, Domain::Scratch, k as u64);
        for e in enumerate_hyperedges(n, k)? {
            let pi = alpha * sigma(-edge_concentration(params, e.nodes(), &mut scratch));
            if rng.random::<f64>() < pi {
                h.insert(e)?;
            }
        }
    }
    Ok(h)
}
