//! Text formats for positions, model parameters and edge scores.
//!
//! Positions file:
//!
//! ```text
//! # dim r=2
//! # geometry hyperbolic
//! 0	1.0000000000000000e0	0.0000000000000000e0	0.0000000000000000e0
//! ```
//!
//! Parameters file, one `key value` pair per line:
//!
//! ```text
//! geometry hyperbolic
//! dim 2
//! p -20
//! alpha 2 0.5
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::eval::ScoredEdge;
use crate::hypergraph::Hyperedge;
use crate::model::{Geometry, ModelParams, Positions};

pub fn write_positions<W: Write>(
    positions: &Positions,
    geometry: Geometry,
    mut out: W,
) -> Result<()> {
    let r = match geometry {
        Geometry::Hyperbolic => positions.width().saturating_sub(1),
        Geometry::Euclidean => positions.width(),
    };
    writeln!(out, "# dim r={r}")?;
    writeln!(out, "# geometry {geometry}")?;
    for (i, row) in positions.rows().enumerate() {
        write!(out, "{i}")?;
        for v in row {
            write!(out, "\t{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a positions file. The geometry comes from the `# geometry` line,
/// or from the row width when that line is absent.
pub fn parse_positions<R: BufRead>(reader: R) -> Result<(Positions, Geometry)> {
    let mut dim: Option<usize> = None;
    let mut geometry: Option<Geometry> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
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
            let body = body.trim();
            if let Some(v) = body.strip_prefix("dim r=") {
                if dim.is_some() || !rows.is_empty() {
                    return Err(Error::parse(line_no, "misplaced '# dim' header"));
                }
                dim = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, "bad '# dim r=' value"))?,
                );
            } else if let Some(v) = body.strip_prefix("geometry") {
                geometry = Some(v.trim().parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?);
            } else if dim.is_none() {
                return Err(Error::parse(line_no, "the first comment must be '# dim r=<r>'"));
            }
            continue;
        }
        let r = dim.ok_or_else(|| Error::parse(line_no, "missing '# dim r=<r>' header"))?;
        let mut toks = line.split_whitespace();
        let id: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(line_no, "missing node id"))?;
        if id != rows.len() {
            return Err(Error::parse(
                line_no,
                format!("expected node id {}, got {id}", rows.len()),
            ));
        }
        let row = toks
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad coordinate '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = match geometry {
            Some(g) => g.row_width(r),
            None if row.len() == r => r,
            None => r + 1,
        };
        if row.len() != expected {
            return Err(Error::parse(
                line_no,
                format!("expected {expected} coordinates, got {}", row.len()),
            ));
        }
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(Error::parse(line_no, "rows have different widths"));
            }
        }
        rows.push(row);
    }
    let r = dim.ok_or_else(|| Error::parse(last.max(1), "missing '# dim r=<r>' header"))?;
    if rows.is_empty() {
        return Err(Error::parse(last.max(1), "no positions"));
    }
    let geometry = geometry.unwrap_or(if rows[0].len() == r {
        Geometry::Euclidean
    } else {
        Geometry::Hyperbolic
    });
    Ok((Positions::from_rows(&rows)?, geometry))
}

/// The scalar part of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsHeader {
    pub geometry: Geometry,
    pub dim: usize,
    pub p: f64,
    pub alphas: BTreeMap<usize, f64>,
}

impl ParamsHeader {
    pub fn of(params: &ModelParams) -> Self {
        Self {
            geometry: params.geometry,
            dim: params.dim(),
            p: params.p,
            alphas: params.alphas.clone(),
        }
    }

    /// Combines the header with positions read separately.
    pub fn with_positions(self, positions: Positions) -> Result<ModelParams> {
        if positions.width() != self.geometry.row_width(self.dim) {
            return Err(Error::Dimension {
                expected: self.geometry.row_width(self.dim),
                got: positions.width(),
            });
        }
        ModelParams::new(positions, self.alphas, self.p, self.geometry)
    }
}

pub fn write_params<W: Write>(params: &ModelParams, mut out: W) -> Result<()> {
    writeln!(out, "geometry {}", params.geometry)?;
    writeln!(out, "dim {}", params.dim())?;
    writeln!(out, "p {}", params.p)?;
    for (k, a) in &params.alphas {
        writeln!(out, "alpha {k} {a}")?;
    }
    Ok(())
}

pub fn parse_params<R: BufRead>(reader: R) -> Result<ParamsHeader> {
    let (mut geometry, mut dim, mut p) = (None, None, None);
    let mut alphas = BTreeMap::new();
    let mut last = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        last = line_no;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::parse(line_no, format!("malformed line '{line}'"));
        match toks.as_slice() {
            ["geometry", g] => {
                geometry = Some(g.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?)
            }
            ["dim", r] => dim = Some(r.parse::<usize>().map_err(|_| bad())?),
            ["p", v] => p = Some(v.parse::<f64>().map_err(|_| bad())?),
            ["alpha", k, v] => {
                let k: usize = k.parse().map_err(|_| bad())?;
                let v: f64 = v.parse().map_err(|_| bad())?;
                if alphas.insert(k, v).is_some() {
                    return Err(Error::parse(line_no, format!("repeated alpha for size {k}")));
                }
            }
            _ => return Err(bad()),
        }
    }
    let missing = |what: &str| Error::parse(last.max(1), format!("missing '{what}' line"));
    Ok(ParamsHeader {
        geometry: geometry.ok_or_else(|| missing("geometry"))?,
        dim: dim.ok_or_else(|| missing("dim"))?,
        p: p.ok_or_else(|| missing("p"))?,
        alphas,
    })
}

/// Writes `z`, score and the node indices per line.
pub fn write_scores<W: Write>(scores: &[ScoredEdge], mut out: W) -> Result<()> {
    for s in scores {
        write!(out, "{}\t{:.16e}", s.z as u8, s.score)?;
        for v in s.edge.nodes() {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn parse_scores<R: BufRead>(reader: R) -> Result<Vec<ScoredEdge>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let z = match toks.next() {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(Error::parse(line_no, format!("label must be 0 or 1, got {other:?}")))
            }
        };
        let score: f64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(line_no, "missing or malformed score"))?;
        let nodes = toks
            .map(|t| t.parse::<usize>().map_err(|_| Error::parse(line_no, format!("bad node index '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let edge = Hyperedge::new(nodes).map_err(|e| Error::parse(line_no, e.to_string()))?;
        out.push(ScoredEdge { edge, z, score });
    }
    Ok(out)
}
