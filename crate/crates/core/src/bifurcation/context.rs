use std::sync::Arc;

use crate::coupling::Coupling;
use crate::error::{invalid, Error, Result};
use crate::helmholtz::{far_field, psi_tilde_profile, HelmholtzKernel, SchrodingerKernel};
use crate::linearized::{compute_mode_phase, mode_mu, plan_phases_with, PhasePlan};
use crate::modes::ModeSequence;
use crate::radial::{RadialFn, RadialGrid};
use crate::scalar::{cot, lit, to_f64, Real};
use crate::stationary::{check_nondegenerate_scaled, shoot_ground_state_with, GroundState};

/// Nodes per wavelength of the fastest mode required of the grid.
pub const NODES_PER_WAVELENGTH: f64 = 16.0;

/// Everything the truncated system needs: parameters, ground state,
/// phase plan and the per-mode resolvents on one grid.
#[derive(Debug, Clone)]
pub struct BifurcationContext<T> {
    pub m: T,
    pub omega: T,
    pub coupling: Coupling<T>,
    pub gs: GroundState<T>,
    pub plan: PhasePlan<T>,
    /// `mu_k = omega^2 k^2 - m^2` for `k = 0..=K`.
    pub mu: Vec<T>,
    grid: Arc<RadialGrid<T>>,
    gamma: RadialFn<T>,
    /// `w = (w0, 0, ..., 0)`
    w: ModeSequence<T>,
    gamma_w0_cubed: RadialFn<T>,
    schrodinger: SchrodingerKernel<T>,
    /// Helmholtz kernels for `k = 1..=K` (index `k - 1`).
    helmholtz: Vec<HelmholtzKernel<T>>,
    /// `cot(tau_k)`, index `k - 1`; unused for the excited mode in the G case.
    cot_tau: Vec<T>,
    /// `sin(rho_s r) / (rho_s r)`
    standing_s: RadialFn<T>,
    /// `Psi~_{mu_s} = sin(rho_s r) / (4 pi r)`
    psi_tilde_s: RadialFn<T>,
    tangent: ModeSequence<T>,
    tangent_pairing: T,
}

impl<T: Real> BifurcationContext<T> {
    pub fn new(m: T, omega: T, coupling: Coupling<T>, gs: GroundState<T>, plan: PhasePlan<T>) -> Result<Self> {
        if !(m > T::zero()) {
            return Err(invalid("m", format!("must be positive, got {m}")));
        }
        if !(omega > m) {
            return Err(invalid("omega", format!("requires omega > m, got omega = {omega}, m = {m}")));
        }
        let grid = gs.grid().clone();
        let k_max = plan.k_max;
        let s = plan.s;
        for e in &plan.entries {
            if !e.q_k.grid().same_as(&grid) {
                return Err(Error::GridMismatch);
            }
        }
        let mu: Vec<T> = (0..=k_max).map(|k| mode_mu(k, m, omega)).collect();
        let wavelength = T::two_pi() / mu[k_max].sqrt();
        if grid.max_spacing() > wavelength / lit(NODES_PER_WAVELENGTH) {
            return Err(invalid(
                "grid",
                format!(
                    "spacing {} does not resolve mode {k_max} (needs <= {})",
                    to_f64(grid.max_spacing()),
                    to_f64(wavelength) / NODES_PER_WAVELENGTH
                ),
            ));
        }
        if !plan.is_nondegenerate() {
            return Err(Error::Precondition(
                "phase plan violates tau_k != sigma_k or the [pi/4, 3pi/4] window".into(),
            ));
        }
        let nd = check_nondegenerate_scaled(&gs, T::one())?;
        if !nd.is_nondegenerate {
            return Err(Error::Precondition(format!(
                "ground state is degenerate (kernel mismatch {:e})",
                nd.kernel_mismatch
            )));
        }

        let gamma = coupling.sample(&grid);
        let w0 = gs.w0.clone();
        let gamma_w0_cubed = gamma.mul(&w0).mul(&w0).mul(&w0);
        let w = ModeSequence::single(k_max, 0, w0)?;
        let schrodinger = SchrodingerKernel::new(grid.clone(), m * m)?;
        let helmholtz = (1..=k_max)
            .map(|k| HelmholtzKernel::new(grid.clone(), mu[k]))
            .collect::<Result<Vec<_>>>()?;
        let cot_tau = (1..=k_max)
            .map(|k| {
                if k == s && plan.g_case {
                    T::zero()
                } else {
                    cot(plan.tau(k))
                }
            })
            .collect();
        let standing_s = helmholtz[s - 1].standing_profile();
        let psi_tilde_s = psi_tilde_profile(grid.clone(), mu[s])?;
        let q_s = plan.entry(s).q_k.clone();
        let tangent_pairing = q_s.pairing(&q_s);
        let tangent = ModeSequence::single(k_max, s, q_s)?;
        Ok(Self {
            m,
            omega,
            coupling,
            gs,
            plan,
            mu,
            grid,
            gamma,
            w,
            gamma_w0_cubed,
            schrodinger,
            helmholtz,
            cot_tau,
            standing_s,
            psi_tilde_s,
            tangent,
            tangent_pairing,
        })
    }

    /// Shoots the ground state, computes the phases of modes `1..=K` and
    /// plans them with optional `tau` overrides.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        m: T,
        omega: T,
        coupling: Coupling<T>,
        grid: &Arc<RadialGrid<T>>,
        s: usize,
        k_max: usize,
        overrides: &[(usize, T)],
        ground_state_tol: T,
    ) -> Result<Self> {
        if !(omega > m) {
            return Err(invalid("omega", format!("requires omega > m, got omega = {omega}, m = {m}")));
        }
        let gs = shoot_ground_state_with(m, &coupling, grid, ground_state_tol)?;
        let phases = (1..=k_max)
            .map(|k| compute_mode_phase(k, m, omega, &coupling, &gs))
            .collect::<Result<Vec<_>>>()?;
        let plan = plan_phases_with(s, k_max, phases, overrides)?;
        Self::new(m, omega, coupling, gs, plan)
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn s(&self) -> usize {
        self.plan.s
    }

    pub fn k_max(&self) -> usize {
        self.plan.k_max
    }

    pub fn g_case(&self) -> bool {
        self.plan.g_case
    }

    /// Sampled coupling `Gamma` on the grid.
    pub fn gamma(&self) -> &RadialFn<T> {
        &self.gamma
    }

    /// The trivial solution `w = (w0, 0, ..., 0)`.
    pub fn trivial(&self) -> &ModeSequence<T> {
        &self.w
    }

    pub fn gamma_w0_cubed(&self) -> &RadialFn<T> {
        &self.gamma_w0_cubed
    }

    /// `q` with `q_s` the normalized regular solution, all other modes zero.
    pub fn tangent(&self) -> &ModeSequence<T> {
        &self.tangent
    }

    pub fn helmholtz(&self, k: usize) -> &HelmholtzKernel<T> {
        &self.helmholtz[k - 1]
    }

    pub fn schrodinger(&self) -> &SchrodingerKernel<T> {
        &self.schrodinger
    }

    pub fn psi_tilde_s(&self) -> &RadialFn<T> {
        &self.psi_tilde_s
    }

    /// Phase functional `l(v) = <v_s, q_s> / <q_s, q_s>` (`r^2`-weighted),
    /// `l(q) = 1`.
    pub fn phase_functional(&self, v: &ModeSequence<T>) -> T {
        v.entry(self.s()).pairing(self.tangent.entry(self.s())) / self.tangent_pairing
    }

    /// Coefficients of `l` on the flattened mode-`s` block.
    pub(crate) fn phase_row(&self) -> Vec<T> {
        let q = self.tangent.entry(self.s());
        self.grid
            .weights()
            .iter()
            .zip(self.grid.nodes())
            .zip(q.values())
            .map(|((&w, &r), &v)| w * r * r * v / self.tangent_pairing)
            .collect()
    }

    /// `R^{tau_k}_{mu_k}` (`k >= 1`, `k != s`) or the Schrödinger resolvent
    /// (`k = 0`).
    pub(crate) fn resolve_mode(&self, k: usize, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        if k == 0 {
            self.schrodinger.apply(f)
        } else {
            let (psi, a) = self.helmholtz[k - 1].psi_with_moment(f)?;
            Ok(psi.axpy(self.cot_tau[k - 1] * a, &self.helmholtz[k - 1].standing_profile()))
        }
    }

    /// Excited row, F case: `R^{pi/2}[f] + (cot tau_s - lambda) Psi~ * f`.
    pub(crate) fn resolve_excited_f(&self, f: &RadialFn<T>, lambda: T) -> Result<RadialFn<T>> {
        let s = self.s();
        let (psi, a) = self.helmholtz[s - 1].psi_with_moment(f)?;
        Ok(psi.axpy((self.cot_tau[s - 1] - lambda) * a, &self.standing_s))
    }

    /// `Psi~_{mu_s} * f`.
    pub(crate) fn psi_tilde_conv_s(&self, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        let a = self.helmholtz[self.s() - 1].sine_moment(f)?;
        Ok(self.standing_s.scale(a))
    }

    /// `Psi_{mu_s} * f`.
    pub(crate) fn psi_conv_s(&self, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        self.helmholtz[self.s() - 1].psi(f)
    }

    /// `alpha(v) + beta(v)` of the far field at `mu_s`.
    pub(crate) fn far_field_sum(&self, v: &RadialFn<T>) -> Result<T> {
        let ff = far_field(self.mu[self.s()], v)?;
        Ok(ff.alpha + ff.beta)
    }

    /// Signed `mu` of the radial equation of mode `k`: `mu_k`, or `-m^2`.
    pub fn mu_signed(&self, k: usize) -> T {
        self.mu[k]
    }
}
