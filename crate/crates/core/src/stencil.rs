//! Finite-difference weights on arbitrary nodes (Fornberg's recursion) and
//! local-window differentiation of sampled data.

/// Weights `w[k][j]` such that `f^(k)(x0) ~ sum_j w[k][j] f(nodes[j])` for
/// `k = 0..=max_order`.
pub fn fd_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let m = max_order;
    // c[j][k]: node j, derivative k
    let mut c = vec![vec![0.0; m + 1]; n];
    if n == 0 {
        return vec![Vec::new(); m + 1];
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    (0..=m).map(|k| (0..n).map(|j| c[j][k]).collect()).collect()
}

/// Start index of the `width` nodes of a sorted grid closest to `x`
/// (centred where possible, one-sided near the ends).
pub fn window_start(nodes: &[f64], x: f64, width: usize) -> usize {
    let n = nodes.len();
    if n <= width {
        return 0;
    }
    let upper = nodes.partition_point(|&v| v < x);
    let start = upper.saturating_sub(width / 2);
    start.min(n - width)
}

/// Derivatives `0..=max_order` at `x` of data sampled at `nodes`, from the
/// `width` nearest nodes.
pub fn window_derivatives(nodes: &[f64], values: &[f64], x: f64, width: usize, max_order: usize) -> Vec<f64> {
    let width = width.min(nodes.len());
    let start = window_start(nodes, x, width);
    let w = fd_weights(x, &nodes[start..start + width], max_order);
    w.iter().map(|row| row.iter().zip(&values[start..start + width]).map(|(a, b)| a * b).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_second_derivative_stencil() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn exact_on_polynomials_off_grid() {
        let nodes: Vec<f64> = (0..7).map(|i| 0.3 * i as f64 + 0.1 * (i as f64).sin()).collect();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.1 * x.powi(6);
        let x0 = 0.77;
        let w = fd_weights(x0, &nodes, 4);
        let derivs = [
            f(x0),
            -2.0 + 1.5 * x0 * x0 - 0.6 * x0.powi(5),
            3.0 * x0 - 3.0 * x0.powi(4),
            3.0 - 12.0 * x0.powi(3),
            -36.0 * x0 * x0,
        ];
        for (k, d) in derivs.iter().enumerate() {
            let approx: f64 = w[k].iter().zip(&nodes).map(|(wi, xi)| wi * f(*xi)).sum();
            assert!((approx - d).abs() < 1e-9, "order {k}: {approx} vs {d}");
        }
    }

    #[test]
    fn windows_clamp_at_ends() {
        let nodes: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(window_start(&nodes, 0.2, 6), 0);
        assert_eq!(window_start(&nodes, 19.0, 6), 14);
        assert_eq!(window_start(&nodes, 10.4, 6), 8);
    }
}
