//! Classical fixed-step fourth-order Runge-Kutta kernel shared by the frame
//! transport and the curvature solvers.

use crate::error::Result;

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Number of whole steps of size `h` that fit in `[t0, t1]`, tolerating
/// round-off in the ratio.
pub fn step_count(t0: f64, t1: f64, h: f64) -> usize {
    let r = (t1 - t0) / h;
    (r + 1e-9 * r.abs().max(1.0)).floor().max(0.0) as usize
}
