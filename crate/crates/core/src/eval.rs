//! Model assessment: hyperedge scores, ROC/PR curves, degree distributions
//! and centrality.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, LabeledSample, SampleRecord};
use crate::model::{edge_probability, Geometry, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEdge {
    pub edge: Hyperedge,
    pub z: bool,
    /// Fitted `π(e)`.
    pub score: f64,
}

/// Scores each record by its fitted probability, keeping the input order.
pub fn score_edges<'a>(
    params: &ModelParams,
    records: impl IntoIterator<Item = &'a SampleRecord>,
) -> Result<Vec<ScoredEdge>> {
    records
        .into_iter()
        .map(|r| {
            Ok(ScoredEdge {
                edge: r.edge.clone(),
                z: r.z,
                score: edge_probability(params, &r.edge)?,
            })
        })
        .collect()
}

/// [`score_edges`] over a whole sample, stratum by stratum.
pub fn score_sample(params: &ModelParams, sample: &LabeledSample) -> Result<Vec<ScoredEdge>> {
    score_edges(params, sample.records())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCurves {
    /// `(false-positive rate, recall)` from `(0, 0)` to `(1, 1)`.
    pub roc: Vec<(f64, f64)>,
    /// `(recall, precision)` starting at `(0, 1)`.
    pub pr: Vec<(f64, f64)>,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// ROC and PR curves from a threshold sweep over the distinct scores in
/// descending order; equal scores form one step. Areas use the trapezoid
/// rule, so tied positive/negative pairs count one half in `auc_roc`.
pub fn binary_curves(scored: &[(f64, bool)]) -> Result<BinaryCurves> {
    if let Some(&(s, _)) = scored.iter().find(|(s, _)| s.is_nan()) {
        return Err(Error::domain(format!("score {s} is not a number")));
    }
    let n_pos = scored.iter().filter(|(_, z)| *z).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(format!(
            "curves need both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (p, q) = (n_pos as f64, n_neg as f64);
    let mut roc = vec![(0.0, 0.0)];
    let mut pr = vec![(0.0, 1.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / p;
        roc.push((fp as f64 / q, recall));
        pr.push((recall, tp as f64 / (tp + fp) as f64));
    }
    Ok(BinaryCurves {
        auc_roc: trapezoid(&roc),
        auc_pr: trapezoid(&pr),
        roc,
        pr,
        n_pos,
        n_neg,
    })
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

/// Curves per stratum plus the pooled curves (key 0). Strata with a single
/// class are skipped.
pub fn curves_by_stratum(scored: &[ScoredEdge]) -> Result<BTreeMap<usize, BinaryCurves>> {
    let mut groups: BTreeMap<usize, Vec<(f64, bool)>> = BTreeMap::new();
    for s in scored {
        groups.entry(s.edge.len()).or_default().push((s.score, s.z));
    }
    let mut out = BTreeMap::new();
    for (k, g) in &groups {
        match binary_curves(g) {
            Ok(c) => {
                out.insert(*k, c);
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let pooled: Vec<(f64, bool)> = scored.iter().map(|s| (s.score, s.z)).collect();
    out.insert(0, binary_curves(&pooled)?);
    Ok(out)
}

/// Number of nodes per size-`k` degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeDistribution {
    pub k: usize,
    pub n_nodes: usize,
    /// `degree -> node count`.
    pub counts: BTreeMap<usize, usize>,
}

impl DegreeDistribution {
    /// Node-normalized probability of each degree.
    pub fn frequency(&self, degree: usize) -> f64 {
        self.counts.get(&degree).copied().unwrap_or(0) as f64 / self.n_nodes as f64
    }
}

/// Per-node size-`k` degrees of `h`, zero-degree nodes included.
pub fn node_degrees(h: &Hypergraph, k: usize) -> Vec<usize> {
    let mut deg = vec![0; h.n_nodes()];
    if k >= 2 && k <= h.k_max() {
        for e in h.stratum(k) {
            for &v in e.nodes() {
                deg[v] += 1;
            }
        }
    }
    deg
}

pub fn size_k_degrees(h: &Hypergraph, k: usize) -> DegreeDistribution {
    let mut counts = BTreeMap::new();
    for d in node_degrees(h, k) {
        *counts.entry(d).or_insert(0) += 1;
    }
    DegreeDistribution {
        k,
        n_nodes: h.n_nodes(),
        counts,
    }
}

/// `(1/2) Σ_d |p̂(d) − q̂(d)|`.
pub fn tv_distance(p: &DegreeDistribution, q: &DegreeDistribution) -> Result<f64> {
    if p.k != q.k {
        return Err(Error::domain(format!(
            "degree distributions of sizes {} and {} are not comparable",
            p.k, q.k
        )));
    }
    let mut support: Vec<usize> = p.counts.keys().chain(q.counts.keys()).copied().collect();
    support.sort_unstable();
    support.dedup();
    let sum: f64 = support
        .iter()
        .map(|&d| (p.frequency(d) - q.frequency(d)).abs())
        .sum();
    Ok((0.5 * sum).min(1.0))
}

const CENTRALITY_TOL: f64 = 1e-10;
const CENTRALITY_MAX_ITERS: usize = 10_000;

/// Unit-norm leading eigenvector of `AᵀA`, with `A` the edge-by-node
/// incidence matrix, by power iteration from the all-ones vector.
pub fn eigenvector_centrality(h: &Hypergraph) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::Degenerate("centrality of an empty hypergraph".into()));
    }
    let n = h.n_nodes();
    let edges: Vec<&Hyperedge> = h.edges().collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..CENTRALITY_MAX_ITERS {
        y.iter_mut().for_each(|v| *v = 0.0);
        for e in &edges {
            let ax: f64 = e.nodes().iter().map(|&v| x[v]).sum();
            for &v in e.nodes() {
                y[v] += ax;
            }
        }
        // Rayleigh quotient of the unit vector x.
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut change = 0.0;
        for (xi, yi) in x.iter_mut().zip(&y) {
            let v = yi / norm;
            change += (v - *xi) * (v - *xi);
            *xi = v;
        }
        let done = (next - lambda).abs() <= CENTRALITY_TOL * next.abs()
            && change.sqrt() <= CENTRALITY_TOL.sqrt();
        lambda = next;
        if done {
            break;
        }
    }
    Ok(x)
}

/// Distance of each node to the center: the hyperboloid origin, or the
/// centroid of the positions in the Euclidean geometry.
pub fn distance_to_center(params: &ModelParams) -> Vec<f64> {
    let pos = &params.positions;
    match params.geometry {
        Geometry::Hyperbolic => pos.rows().map(|row| row[0].max(1.0).acosh()).collect(),
        Geometry::Euclidean => {
            let w = pos.width();
            let mut centroid = vec![0.0; w];
            for row in pos.rows() {
                for (c, v) in centroid.iter_mut().zip(row) {
                    *c += v;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= pos.len() as f64);
            pos.rows()
                .map(|row| Geometry::Euclidean.distance(row, &centroid))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Positions;

    fn graph(n: usize, k_max: usize, edges: &[&[usize]]) -> Hypergraph {
        let mut h = Hypergraph::new(n, k_max).unwrap();
        for e in edges {
            h.insert(Hyperedge::new(e.to_vec()).unwrap()).unwrap();
        }
        h
    }

    #[test]
    fn curve_examples() {
        let c = binary_curves(&[(0.9, true), (0.8, false), (0.7, true), (0.6, false)]).unwrap();
        assert!((c.auc_roc - 0.75).abs() < 1e-15);
        let perfect = binary_curves(&[(0.9, true), (0.8, true), (0.2, false)]).unwrap();
        assert_eq!((perfect.auc_roc, perfect.auc_pr), (1.0, 1.0));
        let tied = binary_curves(&[(0.5, true), (0.5, false)]).unwrap();
        assert_eq!(tied.auc_roc, 0.5);
        assert!(matches!(binary_curves(&[(0.5, true)]), Err(Error::Degenerate(_))));
        assert_eq!(c.roc.last(), Some(&(1.0, 1.0)));
        assert_eq!(c.pr[0], (0.0, 1.0));
    }

    #[test]
    fn degrees_and_tv() {
        let h = graph(4, 3, &[&[0, 1], &[1, 2], &[0, 2]]);
        let d = size_k_degrees(&h, 2);
        assert_eq!(d.counts, [(0, 1), (2, 3)].into_iter().collect());
        assert_eq!(node_degrees(&h, 2).iter().sum::<usize>(), 2 * h.stratum_len(2));
        let e = size_k_degrees(&h, 3);
        assert_eq!(e.counts, [(0, 4)].into_iter().collect());

        let p = DegreeDistribution { k: 2, n_nodes: 2, counts: [(0, 1), (1, 1)].into_iter().collect() };
        let q = DegreeDistribution { k: 2, n_nodes: 2, counts: [(0, 2)].into_iter().collect() };
        assert_eq!(tv_distance(&p, &q).unwrap(), 0.5);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        let r = DegreeDistribution { k: 2, n_nodes: 2, counts: [(5, 2)].into_iter().collect() };
        assert_eq!(tv_distance(&q, &r).unwrap(), 1.0);
        assert!(tv_distance(&d, &e).is_err());
    }

    #[test]
    fn centrality_examples() {
        let h = graph(4, 2, &[&[0, 1], &[1, 2], &[0, 2]]);
        let c = eigenvector_centrality(&h).unwrap();
        for v in &c[..3] {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(c[3], 0.0);
        assert!(eigenvector_centrality(&Hypergraph::new(3, 2).unwrap()).is_err());
    }

    #[test]
    fn centers() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![2f64.cosh(), 2f64.sinh(), 0.0]];
        let params = ModelParams::new(
            Positions::from_rows(&rows).unwrap(),
            [(2, 0.5)].into_iter().collect(),
            -20.0,
            Geometry::Hyperbolic,
        )
        .unwrap();
        let d = distance_to_center(&params);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 2.0).abs() < 1e-12);

        let flat = ModelParams::new(
            Positions::from_rows(&[vec![0.3, 0.1], vec![0.3, 0.1]]).unwrap(),
            [(2, 0.5)].into_iter().collect(),
            -20.0,
            Geometry::Euclidean,
        )
        .unwrap();
        assert_eq!(distance_to_center(&flat), vec![0.0, 0.0]);
    }
}
