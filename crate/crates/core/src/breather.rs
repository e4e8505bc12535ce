//! Space-time breathers `U(t, r) = u_0(r) + sum_k 2 cos(omega k t) u_k(r)`
//! assembled from branch points, and their verification.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bifurcation::{BifurcationContext, BranchPoint};
use crate::coupling::Coupling;
use crate::error::{invalid, Error, Result};
use crate::modes::{triple_convolution, ModeSequence};
use crate::radial::{norm_xq, residual_profile, RadialFn, WeightOrder, RESIDUAL_BUFFER};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::stationary::GroundState;

/// Required ratio between the excited and the largest other mode derivative.
pub const EXCITATION_RATIO: f64 = 1e3;

/// `X_1` norm below which a mode counts as not excited.
pub const MODE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpaceTimeField<T> {
    /// `t_i = i T / (t_count - 1)` over one period `T = 2 pi / omega`.
    pub t_nodes: Vec<T>,
    pub r_nodes: Vec<T>,
    /// Grid index of each entry of `r_nodes`.
    pub r_index: Vec<usize>,
    /// `values[i][j] = U(t_i, r_j)`
    pub values: Vec<Vec<T>>,
    pub omega: T,
}

/// `cos(2 pi k i / steps)` with the angle reduced exactly.
fn periodic_cos<T: Real>(k: usize, i: usize, steps: usize) -> T {
    let reduced = (k * i) % steps;
    (T::two_pi() * from_usize::<T>(reduced) / from_usize::<T>(steps)).cos()
}

/// Full modes `u = w + v` of a branch point.
pub fn full_modes<T: Real>(bp: &BranchPoint<T>, gs: &GroundState<T>) -> Result<ModeSequence<T>> {
    let mut u = bp.v.clone();
    u.set(0, bp.v.entry(0).add(&gs.w0))?;
    Ok(u)
}

/// Evaluates the cosine sum at `t_count` times over one period and every
/// `r_subsample`-th grid node.
pub fn assemble_breather<T: Real>(
    bp: &BranchPoint<T>,
    gs: &GroundState<T>,
    omega: T,
    t_count: usize,
    r_subsample: usize,
) -> Result<SpaceTimeField<T>> {
    let u = full_modes(bp, gs)?;
    field_from_modes(&u, omega, t_count, r_subsample)
}

/// [`assemble_breather`] for given full modes `u_k`.
pub fn field_from_modes<T: Real>(
    u: &ModeSequence<T>,
    omega: T,
    t_count: usize,
    r_subsample: usize,
) -> Result<SpaceTimeField<T>> {
    if t_count < 2 {
        return Err(invalid("t_count", "need at least two time samples"));
    }
    if r_subsample == 0 {
        return Err(invalid("r_subsample", "must be at least 1"));
    }
    let steps = t_count - 1;
    let period = T::two_pi() / omega;
    let t_nodes: Vec<T> = (0..t_count)
        .map(|i| period * from_usize::<T>(i) / from_usize::<T>(steps))
        .collect();
    let nodes = u.grid().nodes();
    let r_index: Vec<usize> = (0..nodes.len()).step_by(r_subsample).collect();
    let r_nodes = r_index.iter().map(|&j| nodes[j]).collect();
    let two: T = lit(2.0);
    let values = (0..t_count)
        .map(|i| {
            let weights: Vec<T> = (0..=u.k_max())
                .map(|k| if k == 0 { T::one() } else { two * periodic_cos::<T>(k, i, steps) })
                .collect();
            r_index
                .iter()
                .map(|&j| {
                    u.entries()
                        .iter()
                        .zip(&weights)
                        .fold(T::zero(), |acc, (e, &c)| acc + c * e.values()[j])
                })
                .collect()
        })
        .collect();
    Ok(SpaceTimeField {
        t_nodes,
        r_nodes,
        r_index,
        values,
        omega,
    })
}

impl<T: Real> SpaceTimeField<T> {
    /// `t,r,U` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,r,U\n");
        for (t, row) in self.t_nodes.iter().zip(&self.values) {
            for (r, u) in self.r_nodes.iter().zip(row) {
                let _ = writeln!(s, "{:e},{:e},{:e}", to_f64(*t), to_f64(*r), to_f64(*u));
            }
        }
        s
    }

    /// `max_{t, r} |r U(t, r)|`.
    pub fn weighted_sup(&self) -> T {
        self.values.iter().fold(T::zero(), |m, row| {
            row.iter().zip(&self.r_nodes).fold(m, |m, (&u, &r)| m.max((r * u).abs()))
        })
    }

    /// `max_t ||U(t, .) - U(0, .)||_inf`.
    pub fn time_variation(&self) -> T {
        let first = &self.values[0];
        self.values.iter().fold(T::zero(), |m, row| {
            row.iter().zip(first).fold(m, |m, (&a, &b)| m.max((a - b).abs()))
        })
    }

    /// `max_r |U(T, r) - U(0, r)|`.
    pub fn periodicity_defect(&self) -> T {
        let (first, last) = (&self.values[0], self.values.last().unwrap());
        first.iter().zip(last).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// `max_{t,r} |sum_k e^{i omega k t} (-omega^2 k^2 - Delta + m^2) u_k - Gamma U^3|`
/// over the time samples of `field` and the interior nodes, divided by
/// `max |Gamma U^3|`. Time derivatives are taken termwise.
pub fn pde_residual<T: Real>(
    field: &SpaceTimeField<T>,
    gamma: &Coupling<T>,
    m: T,
    omega: T,
    modes: &ModeSequence<T>,
) -> Result<T> {
    let grid = modes.grid();
    if field.r_index.last().is_some_and(|&j| j >= grid.len()) {
        return Err(invalid("field", "radial samples outside the mode grid"));
    }
    // the field must be the cosine sum of these modes
    let check = field_from_modes(modes, omega, 2, 1)?;
    let scale = modes.max_abs().max(T::one());
    for (&j, &v) in field.r_index.iter().zip(&field.values[0]) {
        if (check.values[0][j] - v).abs() > lit::<T>(1e-12) * scale {
            return Err(invalid("modes", "do not reproduce the field at t = 0"));
        }
    }
    let zero = RadialFn::zeros(grid.clone());
    let defects = modes
        .entries()
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let kk = omega * from_usize::<T>(k);
            residual_profile(u, kk * kk - m * m, &zero)
        })
        .collect::<Result<Vec<_>>>()?;
    let g = gamma.sample(grid);
    let end = grid.interior_end(RESIDUAL_BUFFER);
    let steps = field.t_nodes.len() - 1;
    let two: T = lit(2.0);
    let mut worst = T::zero();
    let mut cubic = T::zero();
    for i in 0..field.t_nodes.len() {
        let weights: Vec<T> = (0..=modes.k_max())
            .map(|k| if k == 0 { T::one() } else { two * periodic_cos::<T>(k, i, steps) })
            .collect();
        for j in 0..end {
            let mut lhs = T::zero();
            let mut u = T::zero();
            for (k, &c) in weights.iter().enumerate() {
                lhs += c * defects[k][j];
                u += c * modes.entry(k).values()[j];
            }
            let rhs = g.values()[j] * u * u * u;
            worst = worst.max((lhs - rhs).abs());
            cubic = cubic.max(rhs.abs());
        }
    }
    if cubic == T::zero() {
        return Err(Error::Precondition("Gamma U^3 vanishes on the grid".into()));
    }
    Ok(worst / cubic)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcitationReport {
    pub s: usize,
    /// `|alpha|` of the pair used for the central difference.
    pub alpha: f64,
    /// `||(v_k(alpha) - v_k(-alpha)) / (2 alpha)||_{X_1}` for `k = 0..=K`.
    pub derivative_norms: Vec<f64>,
    pub ratio: f64,
    pub pass: bool,
}

/// Central-difference estimate of `d/d alpha u_k` at `alpha = 0` from the
/// smallest `+-alpha` pair on the branch.
pub fn mode_excitation_report<T: Real>(
    branch: &[BranchPoint<T>],
    ctx: &BifurcationContext<T>,
) -> Result<ExcitationReport> {
    let mut pair: Option<(&BranchPoint<T>, &BranchPoint<T>)> = None;
    for p in branch.iter().filter(|p| p.alpha > T::zero()) {
        if let Some(m) = branch.iter().find(|m| m.alpha == -p.alpha) {
            if pair.is_none_or(|(best, _)| p.alpha < best.alpha) {
                pair = Some((p, m));
            }
        }
    }
    let (plus, minus) = pair.ok_or_else(|| {
        Error::Precondition("branch too short: no +-alpha pair for the central difference".into())
    })?;
    let two_alpha = plus.alpha + plus.alpha;
    let derivative_norms: Vec<f64> = plus
        .v
        .entries()
        .iter()
        .zip(minus.v.entries())
        .map(|(a, b)| to_f64(norm_xq(&a.sub(b).scale(T::one() / two_alpha), WeightOrder::X1)))
        .collect();
    let s = ctx.s();
    let others = derivative_norms
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != s)
        .fold(0.0f64, |m, (_, &d)| m.max(d));
    let excited = derivative_norms[s];
    let ratio = if others > 0.0 { excited / others } else if excited > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(ExcitationReport {
        s,
        alpha: to_f64(plus.alpha),
        derivative_norms,
        ratio,
        pass: excited > MODE_FLOOR && ratio >= EXCITATION_RATIO,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeReport {
    /// Last mode `r` of the chain `s, 3s, ...` with `3r <= K` above the floor.
    pub r: usize,
    /// `||R^{tau_{3r}}[Gamma v_r^3]||_{X_1}`
    pub predicted_norm: f64,
    /// `||v_{3r}||_{X_1}`
    pub stored_norm: f64,
    /// `||v_{3r} - R^{tau_{3r}}[Gamma v_r^3]||_{X_1} / ||v_{3r}||_{X_1}`
    pub relative_discrepancy: f64,
    /// `||v_{3r}|| / ||R^{tau_{3r}}[Gamma v_r^3]||`
    pub order_ratio: f64,
    pub prediction_nonzero: bool,
    /// `relative_discrepancy <= leading_order_tolerance`
    pub consistent: bool,
    pub leading_order_tolerance: f64,
    /// Modes `s, 3s, 9s, ... <= K` found above the floor.
    pub verified_depth: usize,
}

/// Witnesses the mechanism `v_{3r} = R^{tau_{3r}}[Gamma v_r^3]` that forces
/// infinitely many excited modes, up to the truncation `K`.
pub fn cascade_check<T: Real>(bp: &BranchPoint<T>, ctx: &BifurcationContext<T>) -> Result<CascadeReport> {
    let k_max = ctx.k_max();
    let gamma = ctx.gamma();
    if gamma.values().iter().any(|g| *g == T::zero()) {
        return Err(Error::Precondition("cascade needs Gamma != 0 everywhere".into()));
    }
    let norms: Vec<f64> = bp.v.entries().iter().map(|e| to_f64(norm_xq(e, WeightOrder::X1))).collect();
    if norms.iter().all(|&n| n <= MODE_FLOOR) {
        return Err(Error::Precondition("stationary input: every mode at the floor".into()));
    }
    // last link r of the chain s, 3s, 9s, ... with 3r <= K and v_r excited
    let mut r = 0;
    let mut k = ctx.s();
    while 3 * k <= k_max && norms[k] > MODE_FLOOR {
        r = k;
        k *= 3;
    }
    if r == 0 {
        return Err(Error::Precondition(format!(
            "mode {} not excited or 3s > K = {k_max}",
            ctx.s()
        )));
    }
    let vr = bp.v.entry(r);
    let src = gamma.mul(vr).mul(vr).mul(vr);
    let target = 3 * r;
    let tau = ctx.plan.tau(target);
    let predicted = ctx.helmholtz(target).resolve(tau, &src)?;
    let stored = bp.v.entry(target);
    let predicted_norm = to_f64(norm_xq(&predicted, WeightOrder::X1));
    let stored_norm = norms[target];
    let order_ratio = stored_norm / predicted_norm;
    let relative_discrepancy = to_f64(norm_xq(&stored.sub(&predicted), WeightOrder::X1)) / stored_norm;
    let alpha = to_f64(bp.alpha.abs());
    let leading_order_tolerance = 10.0 * alpha * alpha;
    let mut verified_depth = 0;
    let mut k = ctx.s();
    while k <= k_max && norms[k] > MODE_FLOOR {
        verified_depth += 1;
        k *= 3;
    }
    Ok(CascadeReport {
        r,
        predicted_norm,
        stored_norm,
        relative_discrepancy,
        order_ratio,
        prediction_nonzero: predicted_norm > MODE_FLOOR,
        consistent: relative_discrepancy <= leading_order_tolerance,
        leading_order_tolerance,
        verified_depth,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub pde_residual: f64,
    pub periodicity_defect: f64,
    pub weighted_sup: f64,
    pub time_variation: f64,
    pub truncation_mass: f64,
    pub cascade: Option<CascadeReport>,
}

/// Residual, periodicity, decay and cascade of one branch point.
pub fn verify_point<T: Real>(
    bp: &BranchPoint<T>,
    ctx: &BifurcationContext<T>,
    t_count: usize,
) -> Result<(SpaceTimeField<T>, VerificationReport)> {
    let u = full_modes(bp, &ctx.gs)?;
    let field = field_from_modes(&u, ctx.omega, t_count, 1)?;
    let residual = pde_residual(&field, &ctx.coupling, ctx.m, ctx.omega, &u)?;
    let full = triple_convolution(&u, 3 * u.k_max())?;
    let truncation_mass = full.entries()[u.k_max() + 1..]
        .iter()
        .fold(0.0, |acc, e| acc + 2.0 * to_f64(norm_xq(e, WeightOrder::X3)));
    let cascade = if bp.alpha != T::zero() { Some(cascade_check(bp, ctx)?) } else { None };
    let report = VerificationReport {
        alpha: to_f64(bp.alpha),
        pde_residual: to_f64(residual),
        periodicity_defect: to_f64(field.periodicity_defect()),
        weighted_sup: to_f64(field.weighted_sup()),
        time_variation: to_f64(field.time_variation()),
        truncation_mass,
        cascade,
    };
    Ok((field, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;

    #[test]
    fn cosine_sum_and_period() {
        let grid = make_grid(10.0f64, 32, 1.0).unwrap();
        let w = RadialFn::from_fn(grid.clone(), |r| (-r).exp());
        let v1 = RadialFn::from_fn(grid.clone(), |r| 0.1 / (1.0 + r));
        let mut u = ModeSequence::single(2, 0, w.clone()).unwrap();
        u.set(1, v1.clone()).unwrap();
        let f = field_from_modes(&u, 2.0, 5, 1).unwrap();
        assert_eq!(f.periodicity_defect(), 0.0);
        for (i, row) in f.values.iter().enumerate() {
            let c = (2.0 * f.t_nodes[i]).cos();
            for (j, &x) in row.iter().enumerate() {
                let expect = w.values()[j] + 2.0 * c * v1.values()[j];
                assert!((x - expect).abs() < 1e-14);
            }
        }
        let stationary = field_from_modes(&ModeSequence::single(2, 0, w).unwrap(), 2.0, 7, 3).unwrap();
        assert_eq!(stationary.time_variation(), 0.0);
        assert!(f.to_csv().starts_with("t,r,U\n"));
    }
}
