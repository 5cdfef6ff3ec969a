//! Gauss-Legendre quadrature: fixed composite panels and a simple adaptive
//! bisection driver.

use std::sync::OnceLock;

use crate::error::Result;

const GL_POINTS: usize = 8;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_POINTS))
}

fn panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<f64> {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(mid + half * xi)?;
    }
    Ok(s * half)
}

/// Composite 8-point Gauss-Legendre over `panels` equal panels.
pub fn integrate_panels<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, panels: usize) -> Result<f64> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { a + (i + 1) as f64 * h };
        total += panel(&mut f, lo, hi)?;
    }
    Ok(total)
}

/// Adaptive bisection: a panel is accepted once its 8-point estimate agrees
/// with the sum over its two halves to `tol` (absolute, scaled by the panel
/// share of the interval), to round-off, or once halving stops reducing the
/// disagreement (the integrand's own noise floor).
pub fn integrate_adaptive<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = panel(&mut f, a, b)?;
    adapt(&mut f, a, b, whole, tol, f64::INFINITY, 0)
}

fn adapt<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    parent_diff: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m)?;
    let right = panel(f, m, b)?;
    let refined = left + right;
    let diff = (refined - whole).abs();
    let stalled = depth >= 3 && diff >= 0.25 * parent_diff;
    if diff <= tol || diff <= 16.0 * f64::EPSILON * refined.abs() || stalled || depth >= 40 {
        return Ok(refined);
    }
    Ok(adapt(f, a, m, left, 0.5 * tol, diff, depth + 1)? + adapt(f, m, b, right, 0.5 * tol, diff, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_degree_15_exactly() {
        let v = integrate_panels(|x| Ok(x.powi(15) + x.powi(14)), -1.0, 1.0, 1).unwrap();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let (_, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_peaks() {
        let v = integrate_adaptive(|x| Ok(1.0 / (1.0 + 100.0 * x * x)), -1.0, 1.0, 1e-13).unwrap();
        let exact = 2.0 * (10.0f64).atan() / 10.0;
        assert!((v - exact).abs() < 1e-12);
    }
}
