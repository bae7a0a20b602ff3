//! The hyperedge probability model and its sample loss.
//!
//! A hyperedge `e` is realized independently with probability
//!
//! ```text
//! π(e) = α_|e| · σ(−g(Θ_e)),      σ(x) = 2eˣ / (1 + eˣ),
//! ```
//!
//! where `g` is the Hölder mean with exponent `p < 0` of the per-unit summed
//! distances `d_i = Σ_{j≠i} d(θ_i, θ_j)` within the hyperedge. For large
//! negative `p` the Hölder mean approaches `min_i d_i`, the spread of the
//! unit closest to all others.
//!
//! The sample loss is the Horvitz–Thompson weighted negative log-likelihood
//!
//! ```text
//! ℓ̂ = −Σ_{z=1} log π(e) / μ_e  −  Σ_{z=0} log(1 − π(e)) / μ_e.
//! ```
//!
//! All sums run in a fixed order (stratum, then record), so results are
//! bit-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{distance_raw, minkowski_dot, MANIFOLD_TOL};
use crate::hypergraph::{Hyperedge, LabeledSample, SampleRecord};

/// Upper clamp for π inside `log(1 − π)`.
pub const PI_MAX: f64 = 1.0 - 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Hyperbolic,
    Euclidean,
}

impl Geometry {
    /// Coordinates per position row for latent dimension `r`.
    pub fn row_width(self, r: usize) -> usize {
        match self {
            Geometry::Hyperbolic => r + 1,
            Geometry::Euclidean => r,
        }
    }

    /// Distance between two rows of this geometry.
    #[inline]
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Geometry::Hyperbolic => distance_raw(x, y),
            Geometry::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            "euclidean" => Ok(Geometry::Euclidean),
            _ => Err(Error::Config(format!("unknown geometry '{s}'"))),
        }
    }
}

/// Row-major `N × width` matrix of latent positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl Positions {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::Dimension {
                    expected: width,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n: rows.len(),
            width,
            data,
        })
    }

    pub fn from_flat(n: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * width {
            return Err(Error::Dimension {
                expected: n * width,
                got: data.len(),
            });
        }
        Ok(Self { n, width, data })
    }

    pub fn zeros(n: usize, width: usize) -> Self {
        Self {
            n,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width.max(1)).take(self.n)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Checks every row against the hyperboloid constraint.
    pub fn check_on_manifold(&self, tol: f64) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            let q = minkowski_dot(row, row);
            let scale = row[0].abs().max(1.0).powi(2);
            if !(row[0] > 0.0) || (q + 1.0).abs() > tol * scale {
                return Err(Error::domain(format!(
                    "row {i} is off the hyperboloid (<x,x>_L = {q})"
                )));
            }
        }
        Ok(())
    }
}

/// Positions, per-size sparsity, Hölder exponent and geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub positions: Positions,
    /// `α_k` keyed by hyperedge size.
    pub alphas: BTreeMap<usize, f64>,
    pub p: f64,
    pub geometry: Geometry,
}

impl ModelParams {
    pub fn new(
        positions: Positions,
        alphas: BTreeMap<usize, f64>,
        p: f64,
        geometry: Geometry,
    ) -> Result<Self> {
        if !(p < 0.0) {
            return Err(Error::Config(format!("Hölder exponent must be negative, got {p}")));
        }
        for (&k, &a) in &alphas {
            if k < 2 || !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("invalid sparsity α_{k} = {a}")));
            }
        }
        if geometry == Geometry::Hyperbolic {
            if positions.width() < 2 {
                return Err(Error::Dimension {
                    expected: 2,
                    got: positions.width(),
                });
            }
            positions.check_on_manifold(MANIFOLD_TOL)?;
        }
        Ok(Self {
            positions,
            alphas,
            p,
            geometry,
        })
    }

    /// Latent dimension `r`.
    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Hyperbolic => self.positions.width() - 1,
            Geometry::Euclidean => self.positions.width(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn alpha(&self, k: usize) -> Result<f64> {
        self.alphas
            .get(&k)
            .copied()
            .ok_or_else(|| Error::Config(format!("no sparsity parameter for size {k}")))
    }

    pub fn k_max(&self) -> usize {
        self.alphas.keys().next_back().copied().unwrap_or(2)
    }
}

/// `σ(x) = 2eˣ / (1 + eˣ)`, evaluated through `e^{−|x|}`.
#[inline]
pub fn sigma(x: f64) -> f64 {
    if x <= 0.0 {
        let e = x.exp();
        2.0 * e / (1.0 + e)
    } else {
        2.0 / (1.0 + (-x).exp())
    }
}

/// `ln σ(−g)` for `g >= 0`.
#[inline]
fn ln_sigma_neg(g: f64) -> f64 {
    std::f64::consts::LN_2 - g - (-g).exp().ln_1p()
}

/// Hölder mean `((1/k) Σ d_i^p)^{1/p}` for `p < 0`, computed relative to
/// `m = min d_i` so every power lies in `(0, 1]`. Returns 0 when `m = 0`.
#[inline]
pub fn holder_mean(d: &[f64], p: f64) -> f64 {
    let m = d.iter().copied().fold(f64::INFINITY, f64::min);
    if !(m > 0.0) {
        return 0.0;
    }
    let s: f64 = d.iter().map(|&di| (di / m).powf(p)).sum();
    m * (s / d.len() as f64).powf(1.0 / p)
}

/// Concentration `g` of the given rows: the Hölder mean of the per-unit
/// summed distances.
pub fn concentration_g(points: &[&[f64]], p: f64, geometry: Geometry) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::domain("concentration needs at least two points"));
    }
    if !(p < 0.0) {
        return Err(Error::domain(format!("Hölder exponent must be negative, got {p}")));
    }
    let w = points[0].len();
    if let Some(bad) = points.iter().find(|r| r.len() != w) {
        return Err(Error::Dimension {
            expected: w,
            got: bad.len(),
        });
    }
    let mut scratch = EdgeScratch::default();
    Ok(scratch.concentration(points.len(), |i| points[i], p, geometry))
}

/// Reusable buffers for per-hyperedge evaluation.
#[derive(Debug, Default, Clone)]
pub(crate) struct EdgeScratch {
    dist: Vec<f64>,
    sums: Vec<f64>,
}

impl EdgeScratch {
    /// Fills the pairwise distance table and the per-unit sums, returns `g`.
    #[inline]
    pub(crate) fn concentration<'a>(
        &mut self,
        k: usize,
        row: impl Fn(usize) -> &'a [f64],
        p: f64,
        geometry: Geometry,
    ) -> f64 {
        self.dist.clear();
        self.dist.resize(k * k, 0.0);
        self.sums.clear();
        self.sums.resize(k, 0.0);
        for a in 0..k {
            let ra = row(a);
            for b in a + 1..k {
                let d = geometry.distance(ra, row(b));
                self.dist[a * k + b] = d;
                self.dist[b * k + a] = d;
                self.sums[a] += d;
                self.sums[b] += d;
            }
        }
        holder_mean(&self.sums, p)
    }

    /// After [`EdgeScratch::concentration`] returned `g > 0`, accumulates
    /// `scale · ∂g/∂θ_h` (ambient coordinates) into `out`, where `h` is the
    /// local index of the node within the hyperedge.
    #[inline]
    pub(crate) fn add_grad<'a>(
        &self,
        k: usize,
        row: impl Fn(usize) -> &'a [f64],
        h: usize,
        g: f64,
        p: f64,
        geometry: Geometry,
        scale: f64,
        out: &mut [f64],
    ) {
        // ∂g/∂d_i = (1/k) (g / d_i)^{1-p}
        let coef = |i: usize| (g / self.sums[i]).powf(1.0 - p) / k as f64;
        let ch = coef(h);
        let th = row(h);
        for j in 0..k {
            if j == h {
                continue;
            }
            let d = self.dist[h * k + j];
            if !(d > 0.0) {
                continue;
            }
            let c = scale * (ch + coef(j));
            let tj = row(j);
            match geometry {
                Geometry::Hyperbolic => {
                    // d = arcosh(u), u = -<θ_h, θ_j>_L, ∂u/∂θ_h = -J θ_j
                    let u = -minkowski_dot(th, tj);
                    let s = ((u - 1.0) * (u + 1.0)).sqrt();
                    if !(s > 0.0) {
                        continue;
                    }
                    let f = c / s;
                    out[0] += f * tj[0];
                    for (o, t) in out[1..].iter_mut().zip(&tj[1..]) {
                        *o -= f * t;
                    }
                }
                Geometry::Euclidean => {
                    let f = c / d;
                    for ((o, a), b) in out.iter_mut().zip(th).zip(tj) {
                        *o += f * (a - b);
                    }
                }
            }
        }
    }
}

/// Per-record loss `-(1/μ) log π` or `-(1/μ) log(1 − π)` given `g`.
#[inline]
pub(crate) fn record_loss(alpha: f64, g: f64, z: bool, mu: f64) -> f64 {
    let w = 1.0 / mu;
    if z {
        -w * (alpha.ln() + ln_sigma_neg(g))
    } else {
        let pi = (alpha * sigma(-g)).min(PI_MAX);
        -w * (-pi).ln_1p()
    }
}

/// `∂ℓ_e/∂g = (1/μ)(1 − σ(−g)/2)(z − π)/(1 − π)`.
#[inline]
pub(crate) fn record_dloss_dg(alpha: f64, g: f64, z: bool, mu: f64) -> f64 {
    let s = sigma(-g);
    let pi = (alpha * s).min(PI_MAX);
    let zf = if z { 1.0 } else { 0.0 };
    (1.0 / mu) * (1.0 - 0.5 * s) * (zf - pi) / (1.0 - pi)
}

fn check_edge(params: &ModelParams, e: &Hyperedge) -> Result<()> {
    if e.nodes().last().is_some_and(|&v| v >= params.n_nodes()) {
        return Err(Error::domain(format!(
            "hyperedge {e} references a node outside 0..{}",
            params.n_nodes()
        )));
    }
    Ok(())
}

/// `π(e) = α_|e| σ(−g(Θ_e))`.
pub fn edge_probability(params: &ModelParams, e: &Hyperedge) -> Result<f64> {
    check_edge(params, e)?;
    let alpha = params.alpha(e.len())?;
    let g = edge_concentration(params, e.nodes(), &mut EdgeScratch::default());
    Ok(alpha * sigma(-g))
}

#[inline]
pub(crate) fn edge_concentration(
    params: &ModelParams,
    nodes: &[usize],
    scratch: &mut EdgeScratch,
) -> f64 {
    let pos = &params.positions;
    scratch.concentration(nodes.len(), |i| pos.row(nodes[i]), params.p, params.geometry)
}

/// Counts of numerically degenerate records met while evaluating a loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LossDiagnostics {
    /// Records whose hyperedge has coincident units (`g = 0`).
    pub coincident: usize,
    /// Controls with `π` clamped to [`PI_MAX`] inside `log(1 − π)`.
    pub saturated_controls: usize,
}

/// The sample loss split into its two parts per stratum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    /// `k -> (ℓ̂₀_k, ℓ̂₁_k)`.
    pub by_stratum: BTreeMap<usize, (f64, f64)>,
    pub diagnostics: LossDiagnostics,
}

pub fn sample_loss(params: &ModelParams, sample: &LabeledSample) -> Result<LossBreakdown> {
    if sample.n_nodes() != params.n_nodes() {
        return Err(Error::Dimension {
            expected: params.n_nodes(),
            got: sample.n_nodes(),
        });
    }
    let mut out = LossBreakdown::default();
    let mut scratch = EdgeScratch::default();
    for k in sample.sizes() {
        let records = sample.stratum(k);
        if records.is_empty() {
            continue;
        }
        let alpha = params.alpha(k)?;
        let (mut l0, mut l1) = (0.0, 0.0);
        for r in records {
            let g = edge_concentration(params, r.edge.nodes(), &mut scratch);
            if g == 0.0 {
                out.diagnostics.coincident += 1;
            }
            if r.z {
                l1 += record_loss(alpha, g, true, r.mu);
            } else {
                if alpha * sigma(-g) > PI_MAX {
                    out.diagnostics.saturated_controls += 1;
                }
                l0 += record_loss(alpha, g, false, r.mu);
            }
        }
        out.by_stratum.insert(k, (l0, l1));
        out.total += l0 + l1;
    }
    if !out.total.is_finite() {
        return Err(Error::InfiniteLoss(format!(
            "sample loss is {} (a realized hyperedge has π = 0?)",
            out.total
        )));
    }
    if out.diagnostics.coincident > 0 {
        log::debug!("{} records with coincident units", out.diagnostics.coincident);
    }
    Ok(out)
}

/// Ambient gradient `∇_{θ_h} ℓ̂` (before any J-flip or tangent projection).
pub fn grad_position(params: &ModelParams, sample: &LabeledSample, h: usize) -> Result<Vec<f64>> {
    if h >= params.n_nodes() {
        return Err(Error::domain(format!("node {h} out of range")));
    }
    let mut grad = vec![0.0; params.positions.width()];
    let mut scratch = EdgeScratch::default();
    for k in sample.sizes() {
        let records = sample.stratum(k);
        if records.is_empty() {
            continue;
        }
        let alpha = params.alpha(k)?;
        for r in records {
            if let Some(local) = r.edge.nodes().iter().position(|&v| v == h) {
                accumulate_record_grad(params, &mut scratch, alpha, r, local, &mut grad);
            }
        }
    }
    Ok(grad)
}

#[inline]
pub(crate) fn accumulate_record_grad(
    params: &ModelParams,
    scratch: &mut EdgeScratch,
    alpha: f64,
    r: &SampleRecord,
    local: usize,
    grad: &mut [f64],
) {
    let nodes = r.edge.nodes();
    let g = edge_concentration(params, nodes, scratch);
    if g == 0.0 {
        return;
    }
    let dl = record_dloss_dg(alpha, g, r.z, r.mu);
    let pos = &params.positions;
    scratch.add_grad(
        nodes.len(),
        |i| pos.row(nodes[i]),
        local,
        g,
        params.p,
        params.geometry,
        dl,
        grad,
    );
}

/// Score of the stratum loss in `α`:
/// `Σ (1/μ) [z/α − s(1−z)/(1 − α s)]` with `s = σ(−g)`.
pub fn alpha_score(alpha: f64, params: &ModelParams, stratum: &[SampleRecord]) -> f64 {
    let mut scratch = EdgeScratch::default();
    let terms: Vec<(bool, f64, f64)> = stratum
        .iter()
        .map(|r| {
            let g = edge_concentration(params, r.edge.nodes(), &mut scratch);
            (r.z, r.mu, sigma(-g))
        })
        .collect();
    alpha_score_terms(alpha, &terms)
}

/// [`alpha_score`] over precomputed `(z, μ, σ(−g))` triples.
pub(crate) fn alpha_score_terms(alpha: f64, terms: &[(bool, f64, f64)]) -> f64 {
    terms
        .iter()
        .map(|&(z, mu, s)| {
            if z {
                1.0 / (mu * alpha)
            } else {
                -s / (mu * (1.0 - alpha * s))
            }
        })
        .sum()
}
