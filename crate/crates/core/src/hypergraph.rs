//! Hypergraph and labeled-sample data model with their text formats.
//!
//! Only realized hyperedges are stored; the unrealized ones are the implicit
//! complement. Node indices are dense and 0-based.
//!
//! Edge-list format:
//!
//! ```text
//! # nodes 4
//! # max_size 3
//! 0 1
//! 0 1 2
//! ```
//!
//! Labeled-sample format (tab separated, `z`, `mu`, then the node indices):
//!
//! ```text
//! # nodes 4
//! # max_size 3
//! 1	1	0	1
//! 0	0.25	2	3
//! ```
//!
//! Other `#` lines (for example `# node 3 some-label`) are ignored.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Default cap on the number of hyperedges [`enumerate_hyperedges`] produces.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// A set of at least two distinct nodes, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperedge(Vec<usize>);

impl Hyperedge {
    /// Sorts `nodes`; fails on fewer than two nodes or on repeats.
    pub fn new(mut nodes: Vec<usize>) -> Result<Self> {
        nodes.sort_unstable();
        if nodes.len() < 2 {
            return Err(Error::domain("a hyperedge needs at least two nodes"));
        }
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("duplicate node in hyperedge {nodes:?}")));
        }
        Ok(Self(nodes))
    }

    /// `nodes` must already be strictly ascending.
    pub(crate) fn from_sorted(nodes: Vec<usize>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        Self(nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }
}

impl fmt::Display for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Realized hyperedges of an `n_nodes`-node hypergraph, stratified by size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n_nodes: usize,
    k_max: usize,
    // Indexed by size; entries 0 and 1 stay empty.
    strata: Vec<BTreeSet<Hyperedge>>,
}

impl Hypergraph {
    pub fn new(n_nodes: usize, k_max: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Config("a hypergraph needs at least one node".into()));
        }
        if k_max < 2 {
            return Err(Error::Config(format!("max size must be >= 2, got {k_max}")));
        }
        Ok(Self {
            n_nodes,
            k_max,
            strata: vec![BTreeSet::new(); k_max + 1],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Sizes `2..=k_max`.
    pub fn sizes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.k_max
    }

    fn check_edge(&self, edge: &Hyperedge) -> Result<()> {
        if edge.len() > self.k_max {
            return Err(Error::domain(format!(
                "hyperedge {edge} has size {} > max size {}",
                edge.len(),
                self.k_max
            )));
        }
        if let Some(&v) = edge.nodes().last() {
            if v >= self.n_nodes {
                return Err(Error::domain(format!(
                    "node {v} out of range for {} nodes",
                    self.n_nodes
                )));
            }
        }
        Ok(())
    }

    /// Inserts a realized hyperedge; returns `false` if it was already present.
    pub fn insert(&mut self, edge: Hyperedge) -> Result<bool> {
        self.check_edge(&edge)?;
        let k = edge.len();
        Ok(self.strata[k].insert(edge))
    }

    pub fn contains(&self, edge: &Hyperedge) -> bool {
        self.strata
            .get(edge.len())
            .is_some_and(|s| s.contains(edge))
    }

    pub fn contains_nodes(&self, nodes: &[usize]) -> bool {
        self.strata.get(nodes.len()).is_some_and(|s| {
            // BTreeSet<Hyperedge> cannot be probed by slice without allocating.
            s.contains(&Hyperedge(nodes.to_vec()))
        })
    }

    /// The realized edges of size `k` (empty outside `2..=k_max`).
    pub fn stratum(&self, k: usize) -> impl ExactSizeIterator<Item = &Hyperedge> + '_ {
        static EMPTY: BTreeSet<Hyperedge> = BTreeSet::new();
        self.strata.get(k).unwrap_or(&EMPTY).iter()
    }

    pub fn stratum_len(&self, k: usize) -> usize {
        self.strata.get(k).map_or(0, BTreeSet::len)
    }

    /// All realized edges, size-ascending then lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = &Hyperedge> + '_ {
        self.strata.iter().flat_map(|s| s.iter())
    }

    pub fn num_edges(&self) -> usize {
        self.strata.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_edges() == 0
    }

    /// Number of unrealized hyperedges of size `k`, `C(N,k) - |E_k^(1)|`.
    pub fn complement_len(&self, k: usize) -> f64 {
        binomial_f64(self.n_nodes, k) - self.stratum_len(k) as f64
    }
}

/// One labeled hyperedge of a sample with its inclusion probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub edge: Hyperedge,
    pub z: bool,
    pub mu: f64,
}

/// Labeled hyperedges stratified by size; the estimator's input.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    n_nodes: usize,
    k_max: usize,
    strata: Vec<Vec<SampleRecord>>,
}

impl LabeledSample {
    pub fn new(n_nodes: usize, k_max: usize) -> Result<Self> {
        // Same constraints as the hypergraph header.
        Hypergraph::new(n_nodes, k_max)?;
        Ok(Self {
            n_nodes,
            k_max,
            strata: vec![Vec::new(); k_max + 1],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn sizes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.k_max
    }

    /// Appends a record after range checks. Uniqueness of `(edge, z)` is
    /// the caller's responsibility; [`LabeledSample::validate`] checks it.
    pub fn push(&mut self, record: SampleRecord) -> Result<()> {
        let k = record.edge.len();
        if k > self.k_max {
            return Err(Error::domain(format!(
                "record edge {} exceeds max size {}",
                record.edge, self.k_max
            )));
        }
        if record.edge.nodes().last().is_some_and(|&v| v >= self.n_nodes) {
            return Err(Error::domain(format!(
                "record edge {} has a node out of range",
                record.edge
            )));
        }
        if !(record.mu > 0.0 && record.mu <= 1.0) {
            return Err(Error::domain(format!(
                "inclusion probability {} outside (0, 1]",
                record.mu
            )));
        }
        self.strata[k].push(record);
        Ok(())
    }

    /// Checks that no `(edge, z)` pair repeats within a stratum.
    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.strata.iter().enumerate() {
            let mut seen = HashSet::with_capacity(s.len());
            for r in s {
                if !seen.insert((&r.edge, r.z)) {
                    return Err(Error::domain(format!(
                        "record ({}, z={}) repeated in stratum {k}",
                        r.edge, r.z as u8
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn stratum(&self, k: usize) -> &[SampleRecord] {
        self.strata.get(k).map_or(&[], Vec::as_slice)
    }

    /// Records in stratum order then insertion order.
    pub fn records(&self) -> impl Iterator<Item = &SampleRecord> + '_ {
        self.strata.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.strata.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenates the strata of `other` onto `self`.
    pub fn extend(&mut self, other: LabeledSample) -> Result<()> {
        if other.n_nodes != self.n_nodes || other.k_max != self.k_max {
            return Err(Error::Config("cannot merge samples with different headers".into()));
        }
        for (mine, theirs) in self.strata.iter_mut().zip(other.strata) {
            mine.extend(theirs);
        }
        Ok(())
    }
}

/// Reads the two required header lines; returns `(N, K)` and the number of
/// lines consumed so far.
struct HeaderReader {
    n_nodes: Option<usize>,
    k_max: Option<usize>,
}

impl HeaderReader {
    fn new() -> Self {
        Self {
            n_nodes: None,
            k_max: None,
        }
    }

    /// Handles a comment line; returns an error if the header is out of order.
    fn comment(&mut self, line_no: usize, body: &str) -> Result<()> {
        let mut it = body.split_whitespace();
        match it.next() {
            Some("nodes") => {
                if self.n_nodes.is_some() {
                    return Err(Error::parse(line_no, "repeated '# nodes' header"));
                }
                let n = parse_header_value(line_no, it.next(), "nodes")?;
                self.n_nodes = Some(n);
            }
            Some("max_size") => {
                if self.n_nodes.is_none() {
                    return Err(Error::parse(line_no, "'# max_size' must follow '# nodes'"));
                }
                if self.k_max.is_some() {
                    return Err(Error::parse(line_no, "repeated '# max_size' header"));
                }
                let k = parse_header_value(line_no, it.next(), "max_size")?;
                self.k_max = Some(k);
            }
            _ => {}
        }
        Ok(())
    }

    fn header(&self, line_no: usize) -> Result<(usize, usize)> {
        match (self.n_nodes, self.k_max) {
            (Some(n), Some(k)) => Ok((n, k)),
            _ => Err(Error::parse(
                line_no,
                "missing '# nodes <N>' / '# max_size <K>' header",
            )),
        }
    }
}

fn parse_header_value(line_no: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(line_no, format!("bad '# {what}' header value")))
}

fn parse_indices<'a>(
    line_no: usize,
    toks: impl Iterator<Item = &'a str>,
    n_nodes: usize,
    k_max: usize,
) -> Result<Hyperedge> {
    let nodes = toks
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("bad node index '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(&v) = nodes.iter().find(|&&v| v >= n_nodes) {
        return Err(Error::parse(
            line_no,
            format!("node {v} out of range for {n_nodes} nodes"),
        ));
    }
    if nodes.len() < 2 || nodes.len() > k_max {
        return Err(Error::parse(
            line_no,
            format!("edge size {} outside [2, {k_max}]", nodes.len()),
        ));
    }
    Hyperedge::new(nodes).map_err(|e| Error::parse(line_no, e.to_string()))
}

pub fn parse_hypergraph<R: BufRead>(reader: R) -> Result<Hypergraph> {
    let mut header = HeaderReader::new();
    let mut graph: Option<Hypergraph> = None;
    let mut last = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        last = line_no;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            header.comment(line_no, body)?;
            continue;
        }
        let (n, k) = header.header(line_no)?;
        let g = match &mut graph {
            Some(g) => g,
            None => graph.insert(
                Hypergraph::new(n, k).map_err(|e| Error::parse(line_no, e.to_string()))?,
            ),
        };
        let edge = parse_indices(line_no, line.split_whitespace(), n, k)?;
        g.insert(edge)?;
    }
    match graph {
        Some(g) => Ok(g),
        None => {
            let (n, k) = header.header(last.max(1))?;
            Hypergraph::new(n, k).map_err(|e| Error::parse(last.max(1), e.to_string()))
        }
    }
}

pub fn write_hypergraph<W: Write>(h: &Hypergraph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {}", h.n_nodes)?;
    writeln!(out, "# max_size {}", h.k_max)?;
    for e in h.edges() {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

pub fn parse_sample<R: BufRead>(reader: R) -> Result<LabeledSample> {
    let mut header = HeaderReader::new();
    let mut sample: Option<LabeledSample> = None;
    let mut last = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        last = line_no;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            header.comment(line_no, body)?;
            continue;
        }
        let (n, k) = header.header(line_no)?;
        let s = match &mut sample {
            Some(s) => s,
            None => sample.insert(
                LabeledSample::new(n, k).map_err(|e| Error::parse(line_no, e.to_string()))?,
            ),
        };
        let mut toks = line.split_whitespace();
        let z = match toks.next() {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("label must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let mu: f64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(line_no, "missing or malformed mu"))?;
        let edge = parse_indices(line_no, toks, n, k)?;
        s.push(SampleRecord { edge, z, mu })
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    let sample = match sample {
        Some(s) => s,
        None => {
            let (n, k) = header.header(last.max(1))?;
            LabeledSample::new(n, k).map_err(|e| Error::parse(last.max(1), e.to_string()))?
        }
    };
    sample
        .validate()
        .map_err(|e| Error::parse(last.max(1), e.to_string()))?;
    Ok(sample)
}

pub fn write_sample<W: Write>(s: &LabeledSample, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {}", s.n_nodes)?;
    writeln!(out, "# max_size {}", s.k_max)?;
    for r in s.records() {
        write!(out, "{}\t{}", r.z as u8, r.mu)?;
        for v in r.edge.nodes() {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `C(n, k)` as an exact integer, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `C(n, k)` as a float; exact below 2^53.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    match binomial(n, k) {
        Some(v) => v as f64,
        None => ln_binomial(n, k).exp(),
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Calls `f` on every ascending `k`-subset of `0..n` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Find the rightmost index that can still advance.
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Every size-`k` hyperedge on `n` nodes, in lexicographic order.
pub fn enumerate_hyperedges(n: usize, k: usize) -> Result<Vec<Hyperedge>> {
    enumerate_hyperedges_capped(n, k, ENUMERATION_CAP)
}

pub fn enumerate_hyperedges_capped(n: usize, k: usize, cap: u64) -> Result<Vec<Hyperedge>> {
    if k < 2 || k > n {
        return Err(Error::domain(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    let count = binomial(n, k)
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Capacity(format!("C({n},{k}) exceeds the cap of {cap}")))?;
    let mut out = Vec::with_capacity(count as usize);
    for_each_combination(n, k, |c| out.push(Hyperedge::from_sorted(c.to_vec())));
    Ok(out)
}
