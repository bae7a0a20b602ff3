//! Gram matrices, canonical positions and recovery errors.
//!
//! Positions are identifiable only up to hyperbolic rotations `R` with
//! `R J Rᵀ = J`; the Gram matrix `D = Θ J Θᵀ` is invariant under them. A
//! canonical representative is rebuilt from the eigendecomposition
//! `D = U S Uᵀ` as `Θ̃ = U |S|^{1/2}`, restricted to the one negative and the
//! `r` largest positive eigenvalues.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{renormalize_time, MANIFOLD_TOL};
use crate::model::Positions;

/// The `N × N` matrix `Θ J Θᵀ` of pairwise Lorentz inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Wraps a symmetric matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// `arcosh(−D_ij)`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (-self.0[(i, j)]).max(1.0).acosh()
    }
}

/// `D = Θ J Θᵀ` for rows on the hyperboloid.
pub fn gram(positions: &Positions) -> Result<GramMatrix> {
    if positions.width() < 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: positions.width(),
        });
    }
    positions.check_on_manifold(MANIFOLD_TOL)?;
    let n = positions.len();
    let w = positions.width();
    let theta = DMatrix::from_row_slice(n, w, positions.as_flat());
    let mut theta_j = theta.clone();
    theta_j.column_mut(0).neg_mut();
    let mut d = &theta_j * theta.transpose();
    // Exact symmetry.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (d[(i, j)] + d[(j, i)]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(GramMatrix(d))
}

/// Canonical positions `Θ̃` with `Θ̃ J Θ̃ᵀ = D`.
///
/// Column 0 comes from the negative eigenvalue and is made positive; the
/// remaining columns follow the positive eigenvalues in decreasing order,
/// each flipped so its largest-magnitude entry is positive. Fails with the
/// spectrum attached unless `D` has exactly one negative and at most `r`
/// positive eigenvalues beyond `1e-6 · N`.
pub fn canonicalize(d: &GramMatrix, r: usize) -> Result<Positions> {
    let n = d.n();
    if n == 0 || r == 0 {
        return Err(Error::Config("canonicalization needs N >= 1 and r >= 1".into()));
    }
    let eig = SymmetricEigen::new(d.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let tol = 1e-6 * n as f64;
    let negatives = spectrum.iter().filter(|&&l| l < -tol).count();
    let positives = spectrum.iter().filter(|&&l| l > tol).count();
    if negatives != 1 || positives > r {
        let mut head: Vec<f64> = spectrum.iter().take(r + 2).copied().collect();
        head.extend(spectrum.iter().rev().take(r + 1));
        return Err(Error::Signature { spectrum: head });
    }

    let width = r + 1;
    let mut data = vec![0.0; n * width];
    // Negative eigenvalue first, then positives from the largest down.
    let mut cols = vec![order[0]];
    cols.extend(order.iter().rev().take(r).copied());
    for (c, &idx) in cols.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        let scale = if c == 0 { (-lambda).sqrt() } else { lambda.max(0.0).sqrt() };
        let u = eig.eigenvectors.column(idx);
        let flip = if c == 0 {
            u.sum() < 0.0
        } else {
            let big = u.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            big < 0.0
        };
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            data[i * width + c] = sign * scale * u[i];
        }
    }
    for row in data.chunks_exact_mut(width) {
        renormalize_time(row);
    }
    Positions::from_flat(n, width, data)
}

/// `‖D̂ − D*‖²_F / (N (N − 1))`.
pub fn gram_error(d_hat: &GramMatrix, d_true: &GramMatrix) -> Result<f64> {
    if d_hat.n() != d_true.n() {
        return Err(Error::Dimension {
            expected: d_true.n(),
            got: d_hat.n(),
        });
    }
    let n = d_hat.n();
    if n < 2 {
        return Ok(0.0);
    }
    let ss = (d_hat.matrix() - d_true.matrix()).norm_squared();
    Ok(ss / (n * (n - 1)) as f64)
}

/// Result of [`align_positions`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// The estimate expressed in the frame of `reference`.
    pub aligned: Positions,
    /// The truth in the frame the residual was measured in.
    pub reference: Positions,
    /// `‖aligned − reference‖²_F / N`.
    pub residual: f64,
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Upper bound on `inf_R ‖Θ̂ R − Θ*‖²_F / N` over hyperbolic rotations.
///
/// Both inputs are canonicalized, then the spatial block of the estimate is
/// rotated (or reflected) onto the truth by orthogonal Procrustes. The
/// result is the better of this and the unrotated residual.
pub fn align_positions(theta_hat: &Positions, theta_true: &Positions) -> Result<Alignment> {
    if theta_hat.len() != theta_true.len() {
        return Err(Error::Dimension {
            expected: theta_true.len(),
            got: theta_hat.len(),
        });
    }
    if theta_hat.width() != theta_true.width() {
        return Err(Error::Dimension {
            expected: theta_true.width(),
            got: theta_hat.width(),
        });
    }
    let n = theta_true.len();
    let w = theta_true.width();
    let r = w - 1;
    let c_hat = canonicalize(&gram(theta_hat)?, r)?;
    let c_true = canonicalize(&gram(theta_true)?, r)?;

    let spatial = |p: &Positions| {
        DMatrix::from_fn(n, r, |i, j| p.row(i)[j + 1])
    };
    let a = spatial(&c_hat);
    let b = spatial(&c_true);
    let svd = (a.transpose() * &b).svd(true, true);
    let q = svd.u.expect("requested U") * svd.v_t.expect("requested Vᵀ");
    let rotated = &a * q;
    let mut data = Vec::with_capacity(n * w);
    for i in 0..n {
        data.push(0.0);
        data.extend(rotated.row(i).iter());
        let row = &mut data[i * w..(i + 1) * w];
        renormalize_time(row);
    }
    let aligned = Positions::from_flat(n, w, data)?;
    let canonical_residual = sq_diff(aligned.as_flat(), c_true.as_flat()) / n as f64;
    let identity_residual = sq_diff(theta_hat.as_flat(), theta_true.as_flat()) / n as f64;

    Ok(if identity_residual <= canonical_residual {
        Alignment {
            aligned: theta_hat.clone(),
            reference: theta_true.clone(),
            residual: identity_residual,
        }
    } else {
        Alignment {
            aligned,
            reference: c_true,
            residual: canonical_residual,
        }
    })
}

/// `|α̂_k − α_k| / α_k` per size; sizes with `α_k = 0` are left out.
pub fn sparsity_error(
    alpha_hat: &BTreeMap<usize, f64>,
    alpha_true: &BTreeMap<usize, f64>,
) -> Result<BTreeMap<usize, f64>> {
    if alpha_hat.keys().ne(alpha_true.keys()) {
        return Err(Error::Config(format!(
            "sparsity sizes differ: {:?} vs {:?}",
            alpha_hat.keys().collect::<Vec<_>>(),
            alpha_true.keys().collect::<Vec<_>>()
        )));
    }
    Ok(alpha_true
        .iter()
        .filter(|(_, &t)| t != 0.0)
        .map(|(&k, &t)| (k, (alpha_hat[&k] - t).abs() / t))
        .collect())
}
