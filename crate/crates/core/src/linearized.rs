//! Regular solutions of the linearized Helmholtz equations
//! `-Delta q - mu_k q = 3 Gamma w0^2 q`, their far-field phases and the
//! phase plan that fixes the resolvent of every mode.

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{invalid, Error, Result};
use crate::helmholtz::{far_field, FarFieldData, HelmholtzKernel};
use crate::ode::{Control, Dopri};
use crate::radial::{RadialFn, RadialGrid};
use crate::scalar::{lit, phase_distance, reduce_phase, to_f64, Real};
use crate::stationary::GroundState;

/// Tolerance for the `sigma_k = pi/4` and `sigma_s = 0` comparisons.
pub const PHASE_TOLERANCE: f64 = 1e-6;

/// Largest accepted relative far-field misfit of a regular solution.
pub const FIT_TOLERANCE: f64 = 1e-6;

/// Smallest accepted raw far-field amplitude.
pub const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Potential level (relative to `mu`) beyond which the free solution is used.
const FREE_LEVEL: f64 = 1e-17;

/// Regular solution of mode `k` and its far-field data.
#[derive(Debug, Clone)]
pub struct ModePhase<T> {
    pub k: usize,
    pub mu_k: T,
    pub sigma_k: T,
    /// Far-field amplitude of the regular solution with `q(0) = 1`.
    pub c_k: T,
    /// Regular solution scaled to unit far-field amplitude, `q_k(0) > 0`.
    pub q_k: RadialFn<T>,
    /// Far-field phase from the Prüfer angle.
    pub prufer_sigma: T,
    pub far_field: FarFieldData<T>,
    pub tau_k: Option<T>,
}

/// `mu_k = omega^2 k^2 - m^2`.
pub fn mode_mu<T: Real>(k: usize, m: T, omega: T) -> T {
    let kk = omega * lit::<T>(k as f64);
    kk * kk - m * m
}

/// Potential `3 Gamma(r) w0(r)^2` evaluated off-grid.
pub fn linearized_potential<'a, T: Real>(
    gs: &'a GroundState<T>,
    coupling: &'a Coupling<T>,
) -> impl Fn(T) -> T + 'a {
    move |r: T| {
        let w = gs.eval(r);
        lit::<T>(3.0) * coupling.at(r) * w * w
    }
}

/// Regular solution of `y'' = -(mu + V) y`, `y = r q`, `y(0) = 0`,
/// `y'(0) = 1`, sampled on the grid. Beyond the last radius where `V` is
/// non-negligible the exact free continuation is used.
fn regular_solution<T: Real>(
    grid: &Arc<RadialGrid<T>>,
    mu: T,
    potential: &dyn Fn(T) -> T,
) -> Result<(Vec<T>, T)> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let level = lit::<T>(FREE_LEVEL) * mu;
    let mut cut = n;
    while cut > 0 && potential(nodes[cut - 1]).abs() <= level {
        cut -= 1;
    }
    let cut = cut.min(n - 1);
    let solver = Dopri::new(lit(1e-14), lit(1e-13));
    let rhs = |r: T, y: &[T; 2]| [y[1], -(mu + potential(r)) * y[0]];
    let samples = solver.sample(rhs, &nodes[..=cut], [T::zero(), T::one()])?;
    let mut q = vec![T::zero(); n];
    q[0] = T::one();
    for i in 1..=cut {
        q[i] = samples[i][0] / nodes[i];
    }
    let rho = mu.sqrt();
    let r_c = nodes[cut];
    let (yc, dc) = (samples[cut][0], samples[cut][1]);
    // y = P sin(rho r) + Q cos(rho r) for r >= r_c
    let (s, c) = (rho * r_c).sin_cos();
    let p = yc * s + dc * c / rho;
    let qq = yc * c - dc * s / rho;
    for i in cut + 1..n {
        let r = nodes[i];
        let (s, c) = (rho * r).sin_cos();
        q[i] = (p * s + qq * c) / r;
    }
    Ok((q, r_c))
}

/// Far-field phase of the regular solution from the Prüfer angle
/// `theta' = rho + (V / rho) sin^2(theta)`, `theta(0) = 0`.
fn prufer_phase<T: Real>(mu: T, r_end: T, potential: &dyn Fn(T) -> T) -> Result<T> {
    let rho = mu.sqrt();
    let solver = Dopri::new(lit(1e-14), lit(1e-14));
    let mut h = T::zero();
    let (_, th) = solver.integrate(
        |r, th: &[T; 1]| {
            let s = th[0].sin();
            [rho + potential(r) / rho * s * s]
        },
        T::zero(),
        [T::zero()],
        r_end,
        &mut h,
        |_, _| Control::Continue,
    )?;
    Ok(reduce_phase(th[0] - rho * r_end))
}

/// Regular solution, amplitude and phase of mode `k` for the potential
/// `3 Gamma w0^2`.
pub fn compute_mode_phase<T: Real>(
    k: usize,
    m: T,
    omega: T,
    coupling: &Coupling<T>,
    gs: &GroundState<T>,
) -> Result<ModePhase<T>> {
    if k == 0 {
        return Err(invalid("k", "mode index must be at least 1"));
    }
    if !(omega > m) {
        return Err(invalid("omega", format!("requires omega > m, got omega = {omega}, m = {m}")));
    }
    let mu = mode_mu(k, m, omega);
    let potential = linearized_potential(gs, coupling);
    mode_phase_with_potential(k, mu, gs.grid(), &potential)
}

/// As [`compute_mode_phase`] for an arbitrary radial potential `V`.
pub fn mode_phase_with_potential<T: Real>(
    k: usize,
    mu: T,
    grid: &Arc<RadialGrid<T>>,
    potential: &dyn Fn(T) -> T,
) -> Result<ModePhase<T>> {
    if !(mu > T::zero()) {
        return Err(invalid("mu", format!("mode {k} has mu = {mu} <= 0")));
    }
    let (q, r_free) = regular_solution(grid, mu, potential)?;
    let raw = RadialFn::new(grid.clone(), q)?;
    let ff = far_field(mu, &raw)?;
    if to_f64(ff.fit_residual) > FIT_TOLERANCE {
        return Err(Error::FitResidual {
            residual: to_f64(ff.fit_residual),
            tolerance: FIT_TOLERANCE,
        });
    }
    if to_f64(ff.c.abs()) < AMPLITUDE_FLOOR {
        return Err(Error::VanishingAmplitude(to_f64(ff.c)));
    }
    let rho = mu.sqrt();
    let r_end = r_free.max(lit::<T>(1.0) / rho);
    let prufer_sigma = prufer_phase(mu, r_end, potential)?;
    let q_k = raw.scale(T::one() / ff.c.abs());
    Ok(ModePhase {
        k,
        mu_k: mu,
        sigma_k: ff.sigma,
        c_k: ff.c,
        q_k,
        prufer_sigma,
        far_field: ff,
        tau_k: None,
    })
}

/// `|| q - 3 R^tau [Gamma w0^2 q] ||_inf / || q ||_inf` for the regular
/// solution of a mode; vanishes iff `tau` equals the mode phase.
pub fn fixed_point_defect<T: Real>(
    phase: &ModePhase<T>,
    tau: T,
    potential: &RadialFn<T>,
) -> Result<T> {
    let kernel = HelmholtzKernel::new(phase.q_k.grid().clone(), phase.mu_k)?;
    let image = kernel.resolve(tau, &potential.mul(&phase.q_k))?;
    Ok(phase.q_k.sub(&image).max_abs() / phase.q_k.max_abs())
}

/// Collinearity defect `1 - |<a, b>| / (|a| |b|)` in the grid `l^2` sense.
pub fn collinearity_defect<T: Real>(a: &RadialFn<T>, b: &RadialFn<T>) -> T {
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |s, (&p, &q)| s + p * q);
    let (av, bv) = (a.values(), b.values());
    let ab = dot(av, bv);
    T::one() - ab.abs() / (dot(av, av).sqrt() * dot(bv, bv).sqrt())
}

/// Excited mode, truncation and the phases `tau_k` of every mode.
#[derive(Debug, Clone)]
pub struct PhasePlan<T> {
    pub s: usize,
    pub k_max: usize,
    /// Entries for `k = 1..=K` (index `k - 1`), with `tau_k` assigned.
    pub entries: Vec<ModePhase<T>>,
    pub g_case: bool,
}

#[derive(Serialize)]
struct PlanEntryJson {
    k: usize,
    mu_k: f64,
    sigma_k: f64,
    c_k: f64,
    tau_k: f64,
}

#[derive(Serialize)]
struct PlanJson {
    s: usize,
    #[serde(rename = "K")]
    k_max: usize,
    g_case: bool,
    modes: Vec<PlanEntryJson>,
}

impl<T: Real> PhasePlan<T> {
    pub fn entry(&self, k: usize) -> &ModePhase<T> {
        &self.entries[k - 1]
    }

    pub fn tau(&self, k: usize) -> T {
        self.entry(k).tau_k.expect("phase plan assigns every tau")
    }

    pub fn sigma(&self, k: usize) -> T {
        self.entry(k).sigma_k
    }

    pub fn mu(&self, k: usize) -> T {
        self.entry(k).mu_k
    }

    /// `tau_k != sigma_k` for every `k != s`, all such `tau_k` inside
    /// `[pi/4, 3 pi/4]`.
    pub fn is_nondegenerate(&self) -> bool {
        let lo: T = lit(FRAC_PI_4 - 1e-12);
        let hi: T = lit(3.0 * FRAC_PI_4 + 1e-12);
        self.entries.iter().filter(|e| e.k != self.s).all(|e| {
            let tau = e.tau_k.unwrap_or(e.sigma_k);
            to_f64(phase_distance(tau, e.sigma_k)) > PHASE_TOLERANCE && tau >= lo && tau <= hi
        })
    }

    pub fn to_json(&self) -> String {
        let doc = PlanJson {
            s: self.s,
            k_max: self.k_max,
            g_case: self.g_case,
            modes: self
                .entries
                .iter()
                .map(|e| PlanEntryJson {
                    k: e.k,
                    mu_k: to_f64(e.mu_k),
                    sigma_k: to_f64(e.sigma_k),
                    c_k: to_f64(e.c_k),
                    tau_k: to_f64(e.tau_k.unwrap_or(e.sigma_k)),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("plan serializes")
    }
}

/// Assigns `tau_s = sigma_s` and `tau_k = pi/4` (or `3 pi/4` when
/// `sigma_k = pi/4`) for the other modes.
pub fn plan_phases<T: Real>(s: usize, k_max: usize, phases: Vec<ModePhase<T>>) -> Result<PhasePlan<T>> {
    plan_phases_with(s, k_max, phases, &[])
}

/// [`plan_phases`] with explicit `(k, tau_k)` overrides applied last.
pub fn plan_phases_with<T: Real>(
    s: usize,
    k_max: usize,
    mut phases: Vec<ModePhase<T>>,
    overrides: &[(usize, T)],
) -> Result<PhasePlan<T>> {
    if s == 0 || s > k_max {
        return Err(invalid("s", format!("need 1 <= s <= K, got s = {s}, K = {k_max}")));
    }
    phases.sort_by_key(|p| p.k);
    if phases.len() != k_max || phases.iter().enumerate().any(|(i, p)| p.k != i + 1) {
        return Err(invalid("phases", format!("need one entry for each k = 1..={k_max}")));
    }
    let tol: T = lit(PHASE_TOLERANCE);
    let quarter: T = lit(FRAC_PI_4);
    for p in phases.iter_mut() {
        p.tau_k = Some(if p.k == s {
            p.sigma_k
        } else if phase_distance(p.sigma_k, quarter) <= tol {
            lit(3.0 * FRAC_PI_4)
        } else {
            quarter
        });
    }
    for &(k, tau) in overrides {
        let entry = phases
            .get_mut(k.wrapping_sub(1))
            .ok_or_else(|| invalid("tau", format!("override for mode {k} outside 1..={k_max}")))?;
        if !(tau > T::zero() && tau < T::pi()) && !(k == s && tau == T::zero()) {
            return Err(invalid("tau", format!("override tau_{k} = {tau} outside (0, pi)")));
        }
        entry.tau_k = Some(tau);
    }
    let g_case = phases[s - 1].tau_k.map(|t| phase_distance(t, T::zero()) <= tol).unwrap_or(false);
    Ok(PhasePlan {
        s,
        k_max,
        entries: phases,
        g_case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;
    use std::f64::consts::PI;

    fn fake(k: usize, sigma: f64) -> ModePhase<f64> {
        let grid = make_grid(10.0, 16, 1.0).unwrap();
        ModePhase {
            k,
            mu_k: 1.0,
            sigma_k: sigma,
            c_k: 1.0,
            q_k: RadialFn::zeros(grid),
            prufer_sigma: sigma,
            far_field: FarFieldData::from_amplitudes(sigma.cos(), sigma.sin(), 0.0),
            tau_k: None,
        }
    }

    #[test]
    fn plan_rules() {
        let plan = plan_phases(1, 3, vec![fake(1, 0.0), fake(2, 0.0), fake(3, 0.0)]).unwrap();
        assert!(plan.g_case);
        assert_eq!(plan.tau(1), 0.0);
        assert_eq!(plan.tau(2), PI / 4.0);

        let plan = plan_phases(2, 3, vec![fake(1, 0.3), fake(2, PI / 4.0), fake(3, 0.1)]).unwrap();
        assert_eq!(plan.tau(2), PI / 4.0);
        let plan = plan_phases(1, 3, vec![fake(1, 1.2), fake(2, PI / 4.0), fake(3, 0.1)]).unwrap();
        assert_eq!(plan.tau(2), 3.0 * PI / 4.0);
        assert_eq!(plan.tau(1), 1.2);
        assert_eq!(plan.tau(3), PI / 4.0);
        assert!(!plan.g_case);
        assert!(plan.is_nondegenerate());
        assert!(plan_phases(4, 3, vec![fake(1, 0.0), fake(2, 0.0), fake(3, 0.0)]).is_err());
    }

    #[test]
    fn free_mode_has_zero_phase() {
        let grid = make_grid(100.0f64, 4096, 1.0).unwrap();
        let zero = |_: f64| 0.0;
        let p = mode_phase_with_potential(1, 3.0, &grid, &zero).unwrap();
        assert!(phase_distance(p.sigma_k, 0.0) < 1e-12);
        assert!((p.c_k - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(mode_mu(1, 1.0, 2.0), 3.0);
    }
}
