//! Case-control sampling and train/test splitting.
//!
//! Every realized hyperedge of size `k` enters the sample with inclusion
//! probability 1, and `n` unrealized hyperedges of the same size are drawn
//! per realized one, uniformly and without replacement, so each control has
//! inclusion probability `μ = n |E_k^(1)| / |E_k^(0)|`.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hypergraph::{
    binomial, for_each_combination, Hyperedge, Hypergraph, LabeledSample, SampleRecord,
    ENUMERATION_CAP,
};
use crate::rng::{substream, Domain, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignConfig {
    /// Controls per realized hyperedge.
    pub n_controls: usize,
    pub seed: u64,
}

impl DesignConfig {
    pub fn new(n_controls: usize, seed: u64) -> Result<Self> {
        if n_controls == 0 {
            return Err(Error::Config("need at least one control per case".into()));
        }
        Ok(Self { n_controls, seed })
    }
}

/// Samples all realized hyperedges of `h` plus `n` controls per realized
/// hyperedge. Controls of stratum `k` use stream `k`.
pub fn case_control_sample(h: &Hypergraph, cfg: &DesignConfig) -> Result<LabeledSample> {
    sample_design(h, h, cfg, 0)
}

/// Like [`case_control_sample`] for a held-out set: the cases are the edges
/// of `test`, controls are unrealized in `full`, and stratum `k` draws from
/// stream `K + k` so test controls are independent of training controls.
pub fn case_control_test_sample(
    test: &Hypergraph,
    full: &Hypergraph,
    cfg: &DesignConfig,
) -> Result<LabeledSample> {
    if test.n_nodes() != full.n_nodes() || test.k_max() != full.k_max() {
        return Err(Error::Config("test and full hypergraph headers differ".into()));
    }
    if let Some(e) = test.edges().find(|e| !full.contains(e)) {
        return Err(Error::Config(format!("test edge {e} is missing from the full hypergraph")));
    }
    sample_design(test, full, cfg, full.k_max() as u64)
}

fn sample_design(
    cases: &Hypergraph,
    realized: &Hypergraph,
    cfg: &DesignConfig,
    stream_offset: u64,
) -> Result<LabeledSample> {
    DesignConfig::new(cfg.n_controls, cfg.seed)?;
    if cases.is_empty() {
        return Err(Error::Degenerate("no realized hyperedges to sample".into()));
    }
    let n = cases.n_nodes();
    let mut sample = LabeledSample::new(n, cases.k_max())?;
    for k in cases.sizes() {
        let m = cases.stratum_len(k);
        if m == 0 {
            continue;
        }
        for e in cases.stratum(k) {
            sample.push(SampleRecord {
                edge: e.clone(),
                z: true,
                mu: 1.0,
            })?;
        }
        let mut rng = substream(cfg.seed, Domain::Controls, stream_offset + k as u64);
        let (controls, mu) = draw_controls(realized, k, cfg.n_controls * m, &mut rng)?;
        for edge in controls {
            sample.push(SampleRecord {
                edge,
                z: false,
                mu,
            })?;
        }
    }
    Ok(sample)
}

/// Draws `want` distinct size-`k` hyperedges not in `realized`; returns them
/// in draw order with their common inclusion probability.
fn draw_controls(
    realized: &Hypergraph,
    k: usize,
    want: usize,
    rng: &mut Rng,
) -> Result<(Vec<Hyperedge>, f64)> {
    let n = realized.n_nodes();
    if k > n {
        return Ok((Vec::new(), 1.0));
    }
    let total = binomial(n, k);
    let m = realized.stratum_len(k) as u64;
    let complement = total.map(|t| t - m);

    if let Some(c) = complement {
        if (c as usize) <= want {
            if c as usize != want {
                log::warn!(
                    "stratum {k}: only {c} unrealized hyperedges for {want} controls; \
                     taking the whole complement with μ = 1"
                );
            }
            let all = enumerate_complement(realized, k)?;
            return Ok((all, 1.0));
        }
    }
    let mu = match complement {
        Some(c) => want as f64 / c as f64,
        None => want as f64 / realized.complement_len(k),
    };

    // Dense regime: enumerate and pick without replacement.
    if let (Some(t), Some(c)) = (total, complement) {
        if t <= ENUMERATION_CAP && 2 * want as u64 > c {
            let all = enumerate_complement(realized, k)?;
            let picked = index::sample(rng, all.len(), want);
            let out = picked.iter().map(|i| all[i].clone()).collect();
            return Ok((out, mu));
        }
    }

    // Sparse regime: propose uniform k-subsets, reject realized and repeats.
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let e = Hyperedge::from_sorted(random_k_subset(rng, n, k));
        if realized.contains(&e) || seen.contains(&e) {
            continue;
        }
        seen.insert(e.clone());
        out.push(e);
    }
    Ok((out, mu))
}

fn enumerate_complement(realized: &Hypergraph, k: usize) -> Result<Vec<Hyperedge>> {
    let n = realized.n_nodes();
    if binomial(n, k).map_or(true, |t| t > ENUMERATION_CAP) {
        return Err(Error::Capacity(format!("cannot enumerate C({n},{k}) hyperedges")));
    }
    let mut out = Vec::new();
    for_each_combination(n, k, |c| {
        if !realized.contains_nodes(c) {
            out.push(Hyperedge::from_sorted(c.to_vec()));
        }
    });
    Ok(out)
}

/// Splits the realized hyperedges of every stratum at random:
/// `ceil(fraction · |E_k^(1)|)` go to the first (training) hypergraph.
pub fn train_test_split(
    h: &Hypergraph,
    train_fraction: f64,
    seed: u64,
) -> Result<(Hypergraph, Hypergraph)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut train = Hypergraph::new(h.n_nodes(), h.k_max())?;
    let mut test = Hypergraph::new(h.n_nodes(), h.k_max())?;
    for k in h.sizes() {
        let mut edges: Vec<&Hyperedge> = h.stratum(k).collect();
        if edges.is_empty() {
            continue;
        }
        let mut rng = substream(seed, Domain::Split, k as u64);
        edges.shuffle(&mut rng);
        // Guard against 0.8 * 10 = 8.000000000000002 style round-up.
        let n_train = ((train_fraction * edges.len() as f64) - 1e-9).ceil() as usize;
        for (i, e) in edges.into_iter().enumerate() {
            if i < n_train {
                train.insert(e.clone())?;
            } else {
                test.insert(e.clone())?;
            }
        }
    }
    Ok((train, test))
}

/// A uniformly random size-`k` subset of `0..n`, ascending.
pub(crate) fn random_k_subset(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v = if k * 4 < n {
        // Small k: rejection on repeats is cheaper than index::sample's setup.
        let mut v = Vec::with_capacity(k);
        while v.len() < k {
            let x = rng.random_range(0..n);
            if !v.contains(&x) {
                v.push(x);
            }
        }
        v
    } else {
        index::sample(rng, n, k).into_vec()
    };
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, k_max: usize, edges: &[&[usize]]) -> Hypergraph {
        let mut h = Hypergraph::new(n, k_max).unwrap();
        for e in edges {
            h.insert(Hyperedge::new(e.to_vec()).unwrap()).unwrap();
        }
        h
    }

    #[test]
    fn control_counts_and_weights() {
        // 5 realized of C(9,3) = 84 triples leaves 79 unrealized.
        let edges: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![0, 3, 6], vec![1, 4, 7]];
        let refs: Vec<&[usize]> = edges.iter().map(Vec::as_slice).collect();
        let h = graph(9, 3, &refs);
        let s = case_control_sample(&h, &DesignConfig::new(4, 1).unwrap()).unwrap();
        let controls: Vec<_> = s.stratum(3).iter().filter(|r| !r.z).collect();
        assert_eq!(controls.len(), 20);
        for c in &controls {
            assert!((c.mu - 20.0 / 79.0).abs() < 1e-15);
            assert!(!h.contains(&c.edge));
        }
        let distinct: BTreeSet<_> = controls.iter().map(|c| &c.edge).collect();
        assert_eq!(distinct.len(), 20);
        assert_eq!(s.stratum(3).iter().filter(|r| r.z).count(), 5);
    }

    #[test]
    fn stated_weight_arithmetic() {
        // |E1| = 5, |E0| = 95, n = 4.
        let mu: f64 = (4.0 * 5.0) / 95.0;
        assert!((mu - 0.210_526_3).abs() < 1e-7);
    }

    #[test]
    fn exhausted_complement_takes_everything() {
        let all: Vec<Vec<usize>> = crate::hypergraph::enumerate_hyperedges(5, 2)
            .unwrap()
            .into_iter()
            .map(|e| e.nodes().to_vec())
            .take(8)
            .collect();
        let refs: Vec<&[usize]> = all.iter().map(Vec::as_slice).collect();
        let h = graph(5, 2, &refs);
        let s = case_control_sample(&h, &DesignConfig::new(3, 9).unwrap()).unwrap();
        let controls: Vec<_> = s.stratum(2).iter().filter(|r| !r.z).collect();
        assert_eq!(controls.len(), 2);
        assert!(controls.iter().all(|c| c.mu == 1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let h = graph(40, 3, &[&[0, 1], &[2, 3], &[4, 5, 6], &[7, 8]]);
        let cfg = DesignConfig::new(5, 42).unwrap();
        let a = case_control_sample(&h, &cfg).unwrap();
        let b = case_control_sample(&h, &cfg).unwrap();
        assert_eq!(a, b);
        let c = case_control_sample(&h, &DesignConfig::new(5, 43).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn test_controls_avoid_all_realized_edges() {
        let h = graph(6, 2, &[&[0, 1], &[0, 2], &[1, 2], &[3, 4]]);
        let test = graph(6, 2, &[&[3, 4]]);
        let s = case_control_test_sample(&test, &h, &DesignConfig::new(5, 3).unwrap()).unwrap();
        for r in s.stratum(2).iter().filter(|r| !r.z) {
            assert!(!h.contains(&r.edge));
            assert!((r.mu - 5.0 / 11.0).abs() < 1e-15);
        }
    }

    #[test]
    fn split_sizes() {
        let edges: Vec<Vec<usize>> = (0..10).map(|i| vec![i, i + 1]).collect();
        let refs: Vec<&[usize]> = edges.iter().map(Vec::as_slice).collect();
        let h = graph(12, 3, &refs);
        let (tr, te) = train_test_split(&h, 0.8, 5).unwrap();
        assert_eq!((tr.num_edges(), te.num_edges()), (8, 2));
        assert_eq!(train_test_split(&h, 0.8, 5).unwrap(), (tr.clone(), te.clone()));
        for e in h.edges() {
            assert!(tr.contains(e) ^ te.contains(e));
        }

        let h3 = graph(5, 3, &[&[0, 1], &[1, 2], &[2, 3]]);
        let (tr, te) = train_test_split(&h3, 0.999, 1).unwrap();
        assert_eq!((tr.num_edges(), te.num_edges()), (3, 0));

        let empty = Hypergraph::new(4, 3).unwrap();
        let (tr, te) = train_test_split(&empty, 0.5, 1).unwrap();
        assert!(tr.is_empty() && te.is_empty());
        assert!(train_test_split(&h, 1.0, 1).is_err());
    }
}
