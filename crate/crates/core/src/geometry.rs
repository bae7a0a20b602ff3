//! Lorentz model and Poincaré disk arithmetic.
//!
//! A point of r-dimensional hyperbolic space is stored in the Lorentz
//! (hyperboloid) model as a vector `x` of length `r + 1` with
//!
//! ```text
//! <x, x>_L = -x0^2 + x1^2 + ... + xr^2 = -1,   x0 > 0.
//! ```
//!
//! Index 0 is the "time" coordinate. The Poincaré disk is used for
//! initialization, synthesis of positions and interpretation; the two charts
//! are related by `f(x) = (x1, ..., xr) / (1 + x0)`.
//!
//! Hot loops in [`crate::model`] work on raw `&[f64]` rows and use the
//! unchecked helpers [`minkowski_dot`] and [`distance_raw`]; the checked
//! functions below validate their inputs and are meant for API boundaries.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance on `|<x,x>_L + 1|` accepted by [`LorentzPoint::new`], scaled by
/// `max(1, x0^2)` to absorb cancellation far from the origin.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Tolerance on `|<θ,v>_L|` accepted by [`exp_map`].
pub const TANGENT_TOL: f64 = 1e-8;

/// Below this Lorentz norm [`exp_map`] returns the base point.
const EXP_ZERO_NORM: f64 = 1e-14;

/// A point on the upper sheet of the hyperboloid.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint(Vec<f64>);

/// A point strictly inside the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePoint(Vec<f64>);

/// The signature matrix `J = diag(-1, 1, ..., 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureMatrix {
    size: usize,
}

impl LorentzPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: coords.len(),
            });
        }
        let q = minkowski_dot(&coords, &coords);
        let scale = coords[0].abs().max(1.0).powi(2);
        if !(coords[0] > 0.0) || (q + 1.0).abs() > MANIFOLD_TOL * scale {
            return Err(Error::domain(format!(
                "point is not on the upper sheet (<x,x>_L = {q}, x0 = {})",
                coords[0]
            )));
        }
        Ok(Self(coords))
    }

    /// The hyperboloid origin `(1, 0, ..., 0)` in dimension `r`.
    pub fn origin(r: usize) -> Self {
        let mut c = vec![0.0; r + 1];
        c[0] = 1.0;
        Self(c)
    }

    /// Lifts spatial coordinates onto the hyperboloid by solving for `x0`.
    pub fn from_spatial(spatial: &[f64]) -> Self {
        let mut c = Vec::with_capacity(spatial.len() + 1);
        c.push(0.0);
        c.extend_from_slice(spatial);
        renormalize_time(&mut c);
        Self(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Hyperbolic dimension `r` (one less than the coordinate count).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }
}

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        let n2 = norm_sq(&coords);
        if !(n2 < 1.0) {
            return Err(Error::domain(format!(
                "Poincaré point has norm {} >= 1",
                n2.sqrt()
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl SignatureMatrix {
    /// `J` acting on vectors of length `size = r + 1`.
    pub fn new(size: usize) -> Self {
        Self { size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `x <- J x`.
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.size);
        x[0] = -x[0];
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.size, self.size);
        m[(0, 0)] = -1.0;
        m
    }
}

/// Minkowski inner product without length checks.
#[inline]
pub fn minkowski_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut s = -x[0] * y[0];
    for (a, b) in x[1..].iter().zip(&y[1..]) {
        s += a * b;
    }
    s
}

/// Hyperbolic distance between two raw hyperboloid rows, with the arcosh
/// argument clamped to `>= 1`.
#[inline]
pub fn distance_raw(x: &[f64], y: &[f64]) -> f64 {
    (-minkowski_dot(x, y)).max(1.0).acosh()
}

/// Resets `x0 = sqrt(1 + x1^2 + ... + xr^2)`.
#[inline]
pub fn renormalize_time(x: &mut [f64]) {
    x[0] = (1.0 + norm_sq(&x[1..])).sqrt();
}

#[inline]
pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: x.len(),
        });
    }
    Ok(())
}

/// `<x,y>_L = -x0 y0 + sum_{i>=1} xi yi`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y)?;
    Ok(minkowski_dot(x, y))
}

/// `arcosh(-<x,y>_L)`.
pub fn lorentz_distance(x: &LorentzPoint, y: &LorentzPoint) -> Result<f64> {
    check_len(x.coords(), y.coords())?;
    Ok(distance_raw(x.coords(), y.coords()))
}

pub fn poincare_distance(p: &PoincarePoint, q: &PoincarePoint) -> Result<f64> {
    if p.coords().len() != q.coords().len() {
        return Err(Error::Dimension {
            expected: p.coords().len(),
            got: q.coords().len(),
        });
    }
    let diff: f64 = p
        .coords()
        .iter()
        .zip(q.coords())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let denom = (1.0 - norm_sq(p.coords())) * (1.0 - norm_sq(q.coords()));
    Ok((1.0 + 2.0 * diff / denom).max(1.0).acosh())
}

/// `f(x) = (x1, ..., xr) / (1 + x0)`.
pub fn to_poincare(x: &LorentzPoint) -> PoincarePoint {
    let c = x.coords();
    let d = 1.0 + c[0];
    PoincarePoint(c[1..].iter().map(|v| v / d).collect())
}

/// Inverse of [`to_poincare`]:
/// `x = ((1 + |p|^2), 2p) / (1 - |p|^2)`.
pub fn from_poincare(p: &PoincarePoint) -> LorentzPoint {
    let n2 = norm_sq(p.coords());
    let d = 1.0 - n2;
    let mut c = Vec::with_capacity(p.coords().len() + 1);
    c.push((1.0 + n2) / d);
    c.extend(p.coords().iter().map(|v| 2.0 * v / d));
    LorentzPoint(c)
}

/// `proj_θ(x) = x + <θ,x>_L θ`.
pub fn project_tangent(theta: &LorentzPoint, x: &[f64]) -> Result<Vec<f64>> {
    check_len(theta.coords(), x)?;
    let mut out = x.to_vec();
    project_tangent_in_place(theta.coords(), &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn project_tangent_in_place(theta: &[f64], x: &mut [f64]) {
    let c = minkowski_dot(theta, x);
    for (xi, ti) in x.iter_mut().zip(theta) {
        *xi += c * ti;
    }
}

/// Exponential map `exp_θ(v) = cosh(|v|_L) θ + sinh(|v|_L) v / |v|_L` with
/// `|v|_L = sqrt(<v,v>_L)`. The time coordinate of the result is recomputed
/// from the spatial part.
pub fn exp_map(theta: &LorentzPoint, v: &[f64]) -> Result<LorentzPoint> {
    check_len(theta.coords(), v)?;
    let t = theta.coords();
    let scale = (norm_sq(t) * norm_sq(v)).sqrt().max(1.0);
    let ip = minkowski_dot(t, v);
    if ip.abs() > TANGENT_TOL * scale {
        return Err(Error::domain(format!(
            "vector is not tangent at the base point (<θ,v>_L = {ip})"
        )));
    }
    let vv = minkowski_dot(v, v);
    if vv < -TANGENT_TOL * scale {
        return Err(Error::domain(format!(
            "tangent vector has negative Lorentz norm ({vv})"
        )));
    }
    let norm = vv.max(0.0).sqrt();
    let mut out = t.to_vec();
    if norm < EXP_ZERO_NORM {
        return Ok(LorentzPoint(out));
    }
    geodesic_step(t, v, norm, 1.0, &mut out);
    Ok(LorentzPoint(out))
}

/// Writes `exp_θ(step * v)` into `out`, where `norm = |v|_L > 0`.
#[inline]
pub(crate) fn geodesic_step(theta: &[f64], v: &[f64], norm: f64, step: f64, out: &mut [f64]) {
    let len = step * norm;
    let (ch, sh) = (len.cosh(), len.sinh());
    for ((o, t), vi) in out.iter_mut().zip(theta).zip(v) {
        *o = ch * t + sh * vi / norm;
    }
    renormalize_time(out);
}

/// True iff `|| R J R^T - J ||_F <= tol` and `R00 > 0`.
pub fn is_hyperbolic_rotation(r: &DMatrix<f64>, tol: f64) -> bool {
    if r.nrows() != r.ncols() || r.nrows() < 2 {
        return false;
    }
    let j = SignatureMatrix::new(r.nrows()).to_matrix();
    let resid = r * &j * r.transpose() - &j;
    resid.norm() <= tol && r[(0, 0)] > 0.0
}

/// A boost of rapidity `t` in the (0, axis) plane, size `r + 1`.
pub fn boost(r: usize, axis: usize, t: f64) -> DMatrix<f64> {
    assert!(axis >= 1 && axis <= r);
    let mut m = DMatrix::identity(r + 1, r + 1);
    m[(0, 0)] = t.cosh();
    m[(axis, axis)] = t.cosh();
    m[(0, axis)] = t.sinh();
    m[(axis, 0)] = t.sinh();
    m
}

/// A rotation by `angle` in the spatial (a, b) plane, size `r + 1`.
pub fn spatial_rotation(r: usize, a: usize, b: usize, angle: f64) -> DMatrix<f64> {
    assert!(a >= 1 && b >= 1 && a <= r && b <= r && a != b);
    let mut m = DMatrix::identity(r + 1, r + 1);
    let (s, c) = angle.sin_cos();
    m[(a, a)] = c;
    m[(b, b)] = c;
    m[(a, b)] = -s;
    m[(b, a)] = s;
    m
}
