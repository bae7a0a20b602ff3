//! Brent's bounded univariate minimizer (golden section with parabolic
//! interpolation).

/// Raised when the objective returns a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchFailure {
    pub at: f64,
    pub value: f64,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt 5) / 2
const SQRT_EPS: f64 = 1.490_116_119_384_765_6e-8;

/// Minimizes `phi` on `[lo, hi]`.
///
/// Returns `(argmin, min)`. The endpoints are evaluated as well, so a
/// boundary minimum is returned exactly. `phi` is never called outside
/// `[lo, hi]` and at most `max_evals` times (at least 3 evaluations are
/// needed for a meaningful result).
pub fn brent_minimize(
    mut phi: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_evals: usize,
) -> Result<(f64, f64), LineSearchFailure> {
    assert!(lo < hi, "empty bracket [{lo}, {hi}]");
    let mut evals = 0usize;
    let mut eval = |x: f64, evals: &mut usize| -> Result<f64, LineSearchFailure> {
        *evals += 1;
        let v = phi(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(LineSearchFailure { at: x, value: v })
        }
    };

    let f_lo = eval(lo, &mut evals)?;
    let f_hi = eval(hi, &mut evals)?;
    let mut best = if f_hi < f_lo { (hi, f_hi) } else { (lo, f_lo) };

    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let mut fx = eval(x, &mut evals)?;
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    while evals < max_evals {
        let m = 0.5 * (a + b);
        let tol1 = SQRT_EPS * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // Parabola through (v, fv), (w, fw), (x, fx).
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let u = u.clamp(lo, hi);
        let fu = eval(u, &mut evals)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if fx < best.1 {
        best = (x, fx);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let (x, f) = brent_minimize(|t| (t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-8, 100).unwrap();
        assert!((x - 0.3).abs() < 1e-6, "{x}");
        assert!(f < 1e-12);
    }

    #[test]
    fn boundary_minimum() {
        let (x, f) = brent_minimize(|t| t, 0.0, 1.0, 1e-8, 100).unwrap();
        assert_eq!((x, f), (0.0, 0.0));
        let (x, _) = brent_minimize(|t| -t, 0.0, 1.0, 1e-8, 100).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn cosine() {
        let (x, _) = brent_minimize(f64::cos, 0.0, 3.0, 1e-8, 100).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
        let (x, _) = brent_minimize(f64::cos, 0.0, 4.0, 1e-8, 100).unwrap();
        assert!((x - std::f64::consts::PI).abs() < 1e-6, "{x}");
    }

    #[test]
    fn respects_bracket_and_budget() {
        let mut calls = Vec::new();
        let _ = brent_minimize(
            |t| {
                calls.push(t);
                (t - 7.0).powi(2)
            },
            -1.0,
            2.0,
            1e-10,
            25,
        )
        .unwrap();
        assert!(calls.len() <= 25);
        assert!(calls.iter().all(|&t| (-1.0..=2.0).contains(&t)));
    }

    #[test]
    fn non_finite_values_fail() {
        let r = brent_minimize(|t| if t > 0.5 { f64::NAN } else { t }, 0.0, 1.0, 1e-8, 50);
        assert!(r.is_err());
    }
}
