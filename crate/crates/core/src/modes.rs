//! Symmetric mode sequences `u_k = u_{-k}`, stored for `k = 0..=K`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::radial::{norm_xq, RadialFn, RadialGrid, WeightOrder};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone)]
pub struct ModeSequence<T> {
    grid: Arc<RadialGrid<T>>,
    entries: Vec<RadialFn<T>>,
}

impl<T: Real> ModeSequence<T> {
    /// Entries for `k = 0..=K`; all must live on one grid.
    pub fn new(entries: Vec<RadialFn<T>>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| invalid("entries", "need at least mode 0"))?;
        let grid = first.grid().clone();
        for e in &entries[1..] {
            first.ensure_same_grid(e)?;
        }
        Ok(Self { grid, entries })
    }

    pub fn zeros(grid: Arc<RadialGrid<T>>, k_max: usize) -> Self {
        let entries = (0..=k_max).map(|_| RadialFn::zeros(grid.clone())).collect();
        Self { grid, entries }
    }

    /// Zero sequence except `u_k = f`.
    pub fn single(k_max: usize, k: usize, f: RadialFn<T>) -> Result<Self> {
        if k > k_max {
            return Err(invalid("k", format!("mode {k} beyond K = {k_max}")));
        }
        let mut out = Self::zeros(f.grid().clone(), k_max);
        out.entries[k] = f;
        Ok(out)
    }

    pub fn k_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    /// `u_k` for any signed index; zero beyond the truncation.
    pub fn get(&self, k: isize) -> Option<&RadialFn<T>> {
        self.entries.get(k.unsigned_abs())
    }

    pub fn entry(&self, k: usize) -> &RadialFn<T> {
        &self.entries[k]
    }

    pub fn entries(&self) -> &[RadialFn<T>] {
        &self.entries
    }

    pub fn set(&mut self, k: usize, f: RadialFn<T>) -> Result<()> {
        if k > self.k_max() {
            return Err(invalid("k", format!("mode {k} beyond K = {}", self.k_max())));
        }
        self.entries[0].ensure_same_grid(&f)?;
        self.entries[k] = f;
        Ok(())
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.k_max() != other.k_max() {
            return Err(invalid(
                "K",
                format!("truncations differ: {} vs {}", self.k_max(), other.k_max()),
            ));
        }
        self.entries[0].ensure_same_grid(&other.entries[0])
    }

    pub fn map_modes(&self, f: impl Fn(usize, &RadialFn<T>) -> RadialFn<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            entries: self.entries.iter().enumerate().map(|(k, e)| f(k, e)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map_modes(|_, e| e.scale(c))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        self.map_modes(|k, e| e.axpy(a, &other.entries[k]))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Same modes on a truncation `k_max`, padding with zeros or dropping.
    pub fn truncated(&self, k_max: usize) -> Self {
        let mut entries: Vec<_> = self.entries.iter().take(k_max + 1).cloned().collect();
        while entries.len() <= k_max {
            entries.push(RadialFn::zeros(self.grid.clone()));
        }
        Self {
            grid: self.grid.clone(),
            entries,
        }
    }

    /// Concatenated node values, mode 0 first.
    pub fn to_vector(&self) -> Vec<T> {
        self.entries.iter().flat_map(|e| e.values().iter().copied()).collect()
    }

    pub fn from_vector(grid: Arc<RadialGrid<T>>, k_max: usize, data: &[T]) -> Result<Self> {
        let n = grid.len();
        if data.len() != n * (k_max + 1) {
            return Err(invalid(
                "data",
                format!("expected {} values, got {}", n * (k_max + 1), data.len()),
            ));
        }
        let entries = data
            .chunks(n)
            .map(|c| RadialFn::new(grid.clone(), c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, entries })
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, e| m.max(e.max_abs()))
    }

    /// One CSV per mode (`mode_<k>.csv`) plus `manifest.json` with `K`
    /// and the `X_1` norms.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (k, e) in self.entries.iter().enumerate() {
            fs::write(dir.join(format!("mode_{k}.csv")), e.to_csv())?;
        }
        let manifest = Manifest {
            k_max: self.k_max(),
            norms: self.entries.iter().map(|e| to_f64(norm_xq(e, WeightOrder::X1))).collect(),
            total: to_f64(mode_norm(self, WeightOrder::X1)),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read_dir(grid: Arc<RadialGrid<T>>, dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let entries = (0..=manifest.k_max)
            .map(|k| {
                let text = fs::read_to_string(dir.join(format!("mode_{k}.csv")))?;
                RadialFn::from_csv(grid.clone(), &text)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(rename = "K")]
    k_max: usize,
    norms: Vec<f64>,
    total: f64,
}

/// `(a * b * c)_k` for `k = 0..=k_out` with pointwise radial products.
pub fn convolve3<T: Real>(
    a: &ModeSequence<T>,
    b: &ModeSequence<T>,
    c: &ModeSequence<T>,
    k_out: usize,
) -> Result<ModeSequence<T>> {
    a.entries[0].ensure_same_grid(&b.entries[0])?;
    a.entries[0].ensure_same_grid(&c.entries[0])?;
    let (ka, kb, kc) = (a.k_max(), b.k_max(), c.k_max());
    let n = a.grid.len();
    let mut out = vec![vec![T::zero(); n]; k_out + 1];
    // signed index l stored at l + K
    let mut av = vec![T::zero(); 2 * ka + 1];
    let mut bv = vec![T::zero(); 2 * kb + 1];
    let mut ab = vec![T::zero(); 2 * (ka + kb) + 1];
    let kab = (ka + kb) as isize;
    for j in 0..n {
        for l in 0..=2 * ka {
            av[l] = a.entries[(l as isize - ka as isize).unsigned_abs()].values()[j];
        }
        for l in 0..=2 * kb {
            bv[l] = b.entries[(l as isize - kb as isize).unsigned_abs()].values()[j];
        }
        ab.iter_mut().for_each(|x| *x = T::zero());
        for (l, &x) in av.iter().enumerate() {
            if x == T::zero() {
                continue;
            }
            for (m, &y) in bv.iter().enumerate() {
                ab[l + m] += x * y;
            }
        }
        for (k, row) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            // k = p + q, p in [-(ka+kb), ka+kb], |q| <= kc
            for q in -(kc as isize)..=kc as isize {
                let p = k as isize - q;
                if p.abs() > kab {
                    continue;
                }
                acc += ab[(p + kab) as usize] * c.entries[q.unsigned_abs()].values()[j];
            }
            row[j] = acc;
        }
    }
    let grid = a.grid.clone();
    Ok(ModeSequence {
        entries: out.into_iter().map(|v| RadialFn::new(grid.clone(), v)).collect::<Result<_>>()?,
        grid,
    })
}

/// `(u * u * u)_k = sum_{l+m+n=k, |l|,|m|,|n| <= K} u_l u_m u_n` for
/// `k = 0..=k_out`.
pub fn triple_convolution<T: Real>(u: &ModeSequence<T>, k_out: usize) -> Result<ModeSequence<T>> {
    if k_out > 3 * u.k_max() {
        return Err(invalid(
            "k_out",
            format!("{k_out} exceeds 3K = {}; higher modes vanish", 3 * u.k_max()),
        ));
    }
    convolve3(u, u, u, k_out)
}

/// `||u_0||_{X_q} + 2 sum_{k >= 1} ||u_k||_{X_q}`.
pub fn mode_norm<T: Real>(u: &ModeSequence<T>, q: WeightOrder) -> T {
    u.entries
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, e)| {
            let w = if k == 0 { T::one() } else { lit(2.0) };
            acc + w * norm_xq(e, q)
        })
}

/// `X_3` mass of the modes `K+1..=3K` of `u * u * u`, discarded by the
/// truncated system.
pub fn truncation_mass<T: Real>(u: &ModeSequence<T>) -> Result<T> {
    let k = u.k_max();
    let full = triple_convolution(u, 3 * k)?;
    Ok(full.entries[k + 1..]
        .iter()
        .fold(T::zero(), |acc, e| acc + lit::<T>(2.0) * norm_xq(e, WeightOrder::X3)))
}

#[derive(Debug, Clone, Serialize)]
pub struct TailDecayReport {
    pub alpha: f64,
    /// Fitted `E_alpha`: largest ratio over `k <= K/2`.
    pub constant: f64,
    /// `||u_k||_{X_1} (k^2 + 1)^{alpha/2}` for `k = 0..=K`.
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Slack on `E_alpha` allowed for the upper half of the modes.
pub const TAIL_SLACK: f64 = 0.1;

/// Checks `||u_k||_{X_1} <= E_alpha (k^2 + 1)^{-alpha/2}` with `E_alpha`
/// fitted on the lower half of the modes.
pub fn tail_decay_report<T: Real>(u: &ModeSequence<T>, alpha: f64) -> Result<TailDecayReport> {
    let k_max = u.k_max();
    if k_max < 4 {
        return Err(invalid("K", format!("need K >= 4 to fit the tail, got {k_max}")));
    }
    let ratios: Vec<f64> = u
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let kk = (k * k + 1) as f64;
            to_f64(norm_xq(e, WeightOrder::X1)) * kk.powf(alpha / 2.0)
        })
        .collect();
    let half = k_max / 2;
    let constant = ratios[..=half].iter().cloned().fold(0.0, f64::max);
    let pass = ratios[half + 1..]
        .iter()
        .all(|&r| r <= constant * (1.0 + TAIL_SLACK));
    Ok(TailDecayReport {
        alpha,
        constant,
        ratios,
        pass,
    })
}

/// Brute-force triple loop over `[-K, K]^3`, for checking.
pub fn triple_convolution_naive<T: Real>(
    u: &ModeSequence<T>,
    k_out: usize,
) -> Result<ModeSequence<T>> {
    let k = u.k_max() as isize;
    let mut out = ModeSequence::zeros(u.grid.clone(), k_out);
    for l in -k..=k {
        for m in -k..=k {
            for n in -k..=k {
                let total = l + m + n;
                if total < 0 || total as usize > k_out {
                    continue;
                }
                let prod = u.entries[l.unsigned_abs()]
                    .mul(&u.entries[m.unsigned_abs()])
                    .mul(&u.entries[n.unsigned_abs()]);
                out.entries[total as usize].add_assign_scaled(T::one(), &prod);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;

    fn grid() -> Arc<RadialGrid<f64>> {
        make_grid(10.0, 64, 1.0).unwrap()
    }

    #[test]
    fn stationary_sequence_cubes_mode_zero() {
        let g = grid();
        let w = RadialFn::from_fn(g.clone(), |r| (-r).exp());
        let u = ModeSequence::single(3, 0, w.clone()).unwrap();
        let c = triple_convolution(&u, 9).unwrap();
        let w3 = w.mul(&w).mul(&w);
        assert!(c.entry(0).sub(&w3).max_abs() < 1e-15);
        for k in 1..=9 {
            assert_eq!(c.entry(k).max_abs(), 0.0);
        }
    }

    #[test]
    fn single_first_mode() {
        let g = grid();
        let f = RadialFn::from_fn(g.clone(), |r| 1.0 / (1.0 + r));
        let u = ModeSequence::single(2, 1, f.clone()).unwrap();
        let c = triple_convolution(&u, 6).unwrap();
        let f3 = f.mul(&f).mul(&f);
        assert!(c.entry(1).sub(&f3.scale(3.0)).max_abs() < 1e-15);
        assert!(c.entry(3).sub(&f3).max_abs() < 1e-15);
        for k in [0, 2, 4, 5, 6] {
            assert_eq!(c.entry(k).max_abs(), 0.0);
        }
    }

    #[test]
    fn norms_double_nonzero_modes() {
        let g = grid();
        let f = RadialFn::from_fn(g.clone(), |r| (-r * r).exp());
        assert_eq!(mode_norm(&ModeSequence::zeros(g.clone(), 3), WeightOrder::X1), 0.0);
        let u = ModeSequence::single(3, 1, f.clone()).unwrap();
        assert_eq!(mode_norm(&u, WeightOrder::X2), 2.0 * norm_xq(&f, WeightOrder::X2));
    }

    #[test]
    fn tail_reports() {
        let g = grid();
        let f = RadialFn::from_fn(g.clone(), |r| (-r * r).exp());
        let geo = ModeSequence::new((0..=16).map(|k| f.scale(0.5f64.powi(k))).collect()).unwrap();
        for alpha in [1.0, 2.0, 4.0] {
            assert!(tail_decay_report(&geo, alpha).unwrap().pass);
        }
        let slow = ModeSequence::new((0..=8).map(|k| f.scale(1.0 / (k as f64 + 1.0))).collect()).unwrap();
        assert!(!tail_decay_report(&slow, 4.0).unwrap().pass);
        assert!(tail_decay_report(&ModeSequence::zeros(g, 3), 2.0).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let g = grid();
        let f = RadialFn::from_fn(g.clone(), |r| r.sin());
        let u = ModeSequence::single(2, 2, f).unwrap();
        let back = ModeSequence::from_vector(g, 2, &u.to_vector()).unwrap();
        assert_eq!(back.to_vector(), u.to_vector());
    }
}
