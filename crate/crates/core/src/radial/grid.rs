use std::sync::{Arc, OnceLock};

use crate::error::{invalid, Result};
use crate::radial::quadrature::{local_rules, LocalRule, Parity};
use crate::scalar::{from_usize, lit, Real};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

/// Graded radial grid `r_i = r_max (i / (n - 1))^grading` on `[0, r_max]`
/// together with quadrature weights for `int_0^{r_max} g(r) dr`.
#[derive(Debug, Clone)]
pub struct RadialGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    grading: T,
    odd_rules: OnceLock<Vec<LocalRule<T>>>,
}

impl<T: PartialEq> PartialEq for RadialGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.grading == other.grading
    }
}

/// Position of node `i` of an `n`-node graded grid.
pub fn graded_node<T: Real>(r_max: T, i: usize, n: usize, grading: T) -> T {
    let xi = from_usize::<T>(i) / from_usize::<T>(n - 1);
    if i == 0 {
        T::zero()
    } else if i == n - 1 {
        r_max
    } else {
        r_max * xi.powf(grading)
    }
}

/// Builds a graded grid. Rejects `n < 16`, nonpositive `r_max` and `grading < 1`.
pub fn make_grid<T: Real>(r_max: T, n: usize, grading: T) -> Result<Arc<RadialGrid<T>>> {
    RadialGrid::new(r_max, n, grading).map(Arc::new)
}

impl<T: Real> RadialGrid<T> {
    pub fn new(r_max: T, n: usize, grading: T) -> Result<Self> {
        if n < MIN_NODES {
            return Err(invalid("n", format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        if !(r_max > T::zero()) || !r_max.is_finite() {
            return Err(invalid("r_max", format!("must be positive and finite, got {r_max}")));
        }
        if !(grading >= T::one()) || !grading.is_finite() {
            return Err(invalid("grading", format!("must be >= 1, got {grading}")));
        }
        let nodes: Vec<T> = (0..n).map(|i| graded_node(r_max, i, n, grading)).collect();
        let mut grid = Self {
            nodes,
            weights: Vec::new(),
            grading,
            odd_rules: OnceLock::new(),
        };
        let mut weights = vec![T::zero(); n];
        for rule in local_rules(&grid, Parity::None) {
            let w = rule.plain_weights();
            for (slot, &(node, sign)) in rule.stencil.iter().enumerate() {
                weights[node] += sign * w[slot];
            }
        }
        grid.weights = weights;
        Ok(grid)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn grading(&self) -> T {
        self.grading
    }

    /// Largest node spacing.
    pub fn max_spacing(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `int_0^{r_max} g(r) dr` from node samples.
    pub fn integrate(&self, samples: &[T]) -> T {
        debug_assert_eq!(samples.len(), self.len());
        self.weights
            .iter()
            .zip(samples)
            .fold(T::zero(), |acc, (&w, &g)| acc + w * g)
    }

    /// Index of the first node `>= r`.
    pub fn index_at_or_above(&self, r: T) -> usize {
        self.nodes.partition_point(|&x| x < r).min(self.len() - 1)
    }

    /// Structural equality of two grids (same nodes).
    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || self.nodes == other.nodes
    }

    /// Grid with the same node count and grading whose nodes are scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.r_max() * factor, self.len(), self.grading)
    }

    /// Interval rules for odd integrands `g = r f(r)`, built on first use.
    pub(crate) fn odd_rules(&self) -> &[LocalRule<T>] {
        self.odd_rules.get_or_init(|| local_rules(self, Parity::Odd))
    }

    /// Nodes strictly inside the interior region `[0, (1 - buffer) r_max]`.
    pub(crate) fn interior_end(&self, buffer: f64) -> usize {
        let cut = self.r_max() * (T::one() - lit::<T>(buffer));
        self.nodes.partition_point(|&x| x <= cut)
    }
}
