//! Finite-difference weights on arbitrary nodes and the radial Laplacian.

use crate::radial::grid::RadialGrid;
use crate::scalar::{from_usize, lit, Real};

/// Fornberg's algorithm: weights `c[d][j]` such that
/// `u^{(d)}(x0) ~ sum_j c[d][j] u(x_j)` for `d <= max_derivative`.
pub fn fornberg<T: Real>(x0: T, x: &[T], max_derivative: usize) -> Vec<Vec<T>> {
    let n = x.len();
    let mut c = vec![vec![T::zero(); n]; max_derivative + 1];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(max_derivative);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (from_usize::<T>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - from_usize::<T>(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Signed Laplacian `Delta u = u'' + (2/r) u'` of an even radial profile at
/// every node, from centred `points`-point stencils (reflected through the
/// origin). At `r = 0` the limit `3 u''(0)` is used.
pub fn laplacian<T: Real>(grid: &RadialGrid<T>, values: &[T], points: usize) -> Vec<T> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let half = (points / 2) as isize;
    let mut out = vec![T::zero(); n];
    let mut xs = vec![T::zero(); points];
    let mut us = vec![T::zero(); points];
    for i in 0..n {
        let mut first = i as isize - half;
        if first + points as isize > n as isize {
            first = n as isize - points as isize;
        }
        for j in 0..points {
            let idx = first + j as isize;
            let m = idx.unsigned_abs();
            xs[j] = if idx < 0 { -nodes[m] } else { nodes[m] };
            us[j] = values[m];
        }
        let r = nodes[i];
        let c = fornberg(r, &xs, 2);
        let d2 = dot(&c[2], &us);
        out[i] = if r == T::zero() {
            lit::<T>(3.0) * d2
        } else {
            d2 + lit::<T>(2.0) * dot(&c[1], &us) / r
        };
    }
    out
}

/// First derivative of an even radial profile at every node.
pub fn derivative<T: Real>(grid: &RadialGrid<T>, values: &[T], points: usize) -> Vec<T> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let half = (points / 2) as isize;
    let mut xs = vec![T::zero(); points];
    let mut us = vec![T::zero(); points];
    (0..n)
        .map(|i| {
            let mut first = i as isize - half;
            if first + points as isize > n as isize {
                first = n as isize - points as isize;
            }
            for j in 0..points {
                let idx = first + j as isize;
                let m = idx.unsigned_abs();
                xs[j] = if idx < 0 { -nodes[m] } else { nodes[m] };
                us[j] = values[m];
            }
            let c = fornberg(nodes[i], &xs, 1);
            dot(&c[1], &us)
        })
        .collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let c = fornberg(0.0f64, &[-1.0, 0.0, 1.0], 2);
        assert!((c[2][0] - 1.0).abs() < 1e-14);
        assert!((c[2][1] + 2.0).abs() < 1e-14);
        assert!((c[2][2] - 1.0).abs() < 1e-14);
        assert!((c[1][0] + 0.5).abs() < 1e-14 && (c[1][2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_gaussian() {
        let grid = RadialGrid::new(6.0f64, 601, 1.0).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
        let lap = laplacian(&grid, &u, 7);
        for (r, l) in grid.nodes().iter().zip(&lap).take(500) {
            let exact = (4.0 * r * r - 6.0) * (-r * r).exp();
            assert!((l - exact).abs() < 1e-9, "r={r}: {l} vs {exact}");
        }
    }
}
