use nalgebra::DMatrix;

use crate::linalg::min_eigenvalue;

/// Finds `λ` in `range` with `λ_min(M0 + λ·M1) ≥ −tol`.
///
/// `λ ↦ λ_min(M0 + λ·M1)` is concave, so a ternary search on the range
/// locates its maximum; the first feasible probe is returned.
pub fn psd_linesearch(m0: &DMatrix<f64>, m1: &DMatrix<f64>, range: (f64, f64), tol: f64) -> Option<f64> {
    let f = |lam: f64| min_eigenvalue(&(m0 + m1 * lam));
    let (mut lo, mut hi) = range;
    if lo > hi {
        return None;
    }
    let mid = 0.5 * (lo + hi);
    for probe in [mid, lo, hi] {
        if f(probe) >= -tol {
            return Some(probe);
        }
    }
    // f is concave; narrow to machine precision around the maximizer
    for _ in 0..400 {
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        let (fa, fb) = (f(a), f(b));
        if fa >= -tol {
            return Some(a);
        }
        if fb >= -tol {
            return Some(b);
        }
        if fa < fb {
            lo = a;
        } else {
            hi = b;
        }
    }
    let last = 0.5 * (lo + hi);
    (f(last) >= -tol).then_some(last)
}
