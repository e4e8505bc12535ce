use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::laplacian;
use crate::scalar::{lit, to_f64, Real};

/// Stencil width of the finite-difference Laplacian used for residuals.
pub const RESIDUAL_STENCIL: usize = 7;

/// Fraction of the grid at the outer edge excluded from residual checks.
pub const RESIDUAL_BUFFER: f64 = 0.2;

/// Samples of a radially symmetric function on `R^3`.
#[derive(Debug, Clone)]
pub struct RadialFn<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
    origin_value: T,
}

impl<T: Real> RadialFn<T> {
    /// Wraps node samples. The first grid node is `r = 0`, so the origin
    /// limit is the first sample.
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite sample at node {i}")));
        }
        let origin_value = values[0];
        Ok(Self {
            grid,
            values,
            origin_value,
        })
    }

    pub fn zeros(grid: Arc<RadialGrid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self {
            grid,
            values,
            origin_value: T::zero(),
        }
    }

    /// Samples `f` at the nodes. Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: Arc<RadialGrid<T>>, f: impl Fn(T) -> T) -> Self {
        let values: Vec<T> = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values).expect("sampled function must be finite")
    }

    pub(crate) fn from_parts(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        let origin_value = values[0];
        Self {
            grid,
            values,
            origin_value,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn origin_value(&self) -> T {
        self.origin_value
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid)
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Mismatch between the stored origin value and the quadratic through
    /// the next three nodes, extrapolated to `r = 0`.
    pub fn origin_mismatch(&self) -> T {
        let r = self.grid.nodes();
        let u = &self.values;
        let (r1, r2, r3) = (r[1], r[2], r[3]);
        let l1 = r2 * r3 / ((r1 - r2) * (r1 - r3));
        let l2 = r1 * r3 / ((r2 - r1) * (r2 - r3));
        let l3 = r1 * r2 / ((r3 - r1) * (r3 - r2));
        (self.origin_value - (l1 * u[1] + l2 * u[2] + l3 * u[3])).abs()
    }

    pub fn map(&self, f: impl Fn(T, T) -> T) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self::from_parts(self.grid.clone(), values)
    }

    pub fn scale(&self, c: T) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| c * v).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        assert!(self.same_grid(other), "radial functions on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x + a * y)
            .collect();
        Self::from_parts(self.grid.clone(), values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert!(self.same_grid(other), "radial functions on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * y)
            .collect();
        Self::from_parts(self.grid.clone(), values)
    }

    pub fn add_assign_scaled(&mut self, a: T, other: &Self) {
        assert!(self.same_grid(other), "radial functions on different grids");
        for (x, &y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
        self.origin_value = self.values[0];
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `int u v r^2 dr` (radial part of the `L^2(R^3)` pairing).
    pub fn pairing(&self, other: &Self) -> T {
        assert!(self.same_grid(other), "radial functions on different grids");
        let samples: Vec<T> = self
            .grid
            .nodes()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(&r, (&a, &b))| a * b * r * r)
            .collect();
        self.grid.integrate(&samples)
    }

    /// Six-point Lagrange interpolation (even continuation through the
    /// origin). Outside `[0, r_max]` the edge stencil is extrapolated.
    pub fn interpolate(&self, r: T) -> T {
        let r = r.abs();
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let i = nodes.partition_point(|&x| x <= r).max(1) - 1;
        let mut first = i as isize - 2;
        if first + 6 > n as isize {
            first = n as isize - 6;
        }
        let mut xs = [T::zero(); 6];
        let mut ys = [T::zero(); 6];
        for j in 0..6 {
            let idx = first + j as isize;
            let m = idx.unsigned_abs();
            xs[j] = if idx < 0 { -nodes[m] } else { nodes[m] };
            ys[j] = self.values[m];
        }
        let mut acc = T::zero();
        for j in 0..6 {
            let mut l = T::one();
            for k in 0..6 {
                if k != j {
                    l *= (r - xs[k]) / (xs[j] - xs[k]);
                }
            }
            acc += l * ys[j];
        }
        acc
    }

    /// CSV with header `r,value`, one node per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * self.len() + 8);
        out.push_str("r,value\n");
        for (&r, &v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{:e},{:e}", to_f64(r), to_f64(v));
        }
        out
    }

    /// Parses a CSV written by [`RadialFn::to_csv`]; the radii must match
    /// the nodes of `grid`.
    pub fn from_csv(grid: Arc<RadialGrid<T>>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "r,value" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header `r,value`, found {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut values = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let (r, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {}: expected two fields", row + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))
            };
            let (r, v) = (parse(r)?, parse(v)?);
            let node = grid
                .nodes()
                .get(row)
                .map(|&x| to_f64(x))
                .ok_or_else(|| Error::Parse(format!("more rows than the {} grid nodes", grid.len())))?;
            if (r - node).abs() > 1e-9 * (1.0 + node.abs()) {
                return Err(Error::Parse(format!(
                    "row {}: radius {r} does not match grid node {node}",
                    row + 1
                )));
            }
            values.push(lit::<T>(v));
        }
        Self::new(grid, values)
    }
}

/// Exponent `q` of the weighted supremum norm `sup (1 + r^2)^{q/2} |u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightOrder {
    q: f64,
}

impl WeightOrder {
    pub const X1: Self = Self { q: 1.0 };
    pub const X2: Self = Self { q: 2.0 };
    pub const X3: Self = Self { q: 3.0 };

    pub fn new(q: f64) -> Result<Self> {
        if q >= 0.0 && q.is_finite() {
            Ok(Self { q })
        } else {
            Err(invalid("q", format!("weight exponent must be >= 0, got {q}")))
        }
    }

    pub fn q(self) -> f64 {
        self.q
    }
}

/// Grid supremum of `(1 + r^2)^{q/2} |f(r)|`.
pub fn norm_xq<T: Real>(f: &RadialFn<T>, q: WeightOrder) -> T {
    let half: T = lit(q.q / 2.0);
    f.grid
        .nodes()
        .iter()
        .zip(&f.values)
        .fold(T::zero(), |m, (&r, &v)| {
            m.max((T::one() + r * r).powf(half) * v.abs())
        })
}

/// Radial profile of the unitary 3-D Fourier transform,
/// `sqrt(2/pi) / rho * int_0^{r_max} sin(rho r) f(r) r dr`.
pub fn fourier_profile<T: Real>(f: &RadialFn<T>, rho: T) -> Result<T> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    let g: Vec<T> = f
        .grid
        .nodes()
        .iter()
        .zip(&f.values)
        .map(|(&r, &v)| r * v)
        .collect();
    let z = Complex::new(T::zero(), rho);
    let mut acc = T::zero();
    for rule in f.grid.odd_rules() {
        let w = rule.exp_weights(z);
        let part = rule.dot_complex(&w, &g);
        let (s, c) = (rho * rule.left).sin_cos();
        // Im(e^{i rho left} * part)
        acc += s * part.re + c * part.im;
    }
    Ok((lit::<T>(2.0) / T::pi()).sqrt() / rho * acc)
}

/// Share of `int |f| r^2 dr` carried by the outermost tenth of the grid.
/// Values near zero mean the truncation at `r_max` is harmless for the
/// transforms above.
pub fn tail_weight<T: Real>(f: &RadialFn<T>) -> T {
    let nodes = f.grid.nodes();
    let cut = f.grid.r_max() * lit(0.9);
    let mut all = vec![T::zero(); nodes.len()];
    let mut tail = vec![T::zero(); nodes.len()];
    for (i, (&r, &v)) in nodes.iter().zip(&f.values).enumerate() {
        all[i] = v.abs() * r * r;
        if r >= cut {
            tail[i] = all[i];
        }
    }
    let total = f.grid.integrate(&all);
    if total == T::zero() {
        T::zero()
    } else {
        f.grid.integrate(&tail) / total
    }
}

/// Pointwise defect `-Delta u - mu_signed u - f` at every node.
pub fn residual_profile<T: Real>(u: &RadialFn<T>, mu_signed: T, f: &RadialFn<T>) -> Result<Vec<T>> {
    u.ensure_same_grid(f)?;
    let lap = laplacian(&u.grid, &u.values, RESIDUAL_STENCIL);
    Ok(lap
        .iter()
        .zip(u.values.iter().zip(&f.values))
        .map(|(&l, (&v, &g))| -l - mu_signed * v - g)
        .collect())
}

/// Largest `|-Delta u - mu_signed u - f|` over the nodes outside the outer
/// 20% buffer.
pub fn radial_residual<T: Real>(u: &RadialFn<T>, mu_signed: T, f: &RadialFn<T>) -> Result<T> {
    let defect = residual_profile(u, mu_signed, f)?;
    let end = u.grid.interior_end(RESIDUAL_BUFFER);
    Ok(defect[..end].iter().fold(T::zero(), |m, d| m.max(d.abs())))
}
