use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Control, Dopri};
use crate::scalar::{lit, to_f64, Real};
use crate::stationary::ground_state::GroundState;

/// Verdict threshold on the normalized growing coefficient.
pub const NONDEGENERACY_THRESHOLD: f64 = 1e-4;

/// Potential level `V <= MATCH_LEVEL * m^2` that fixes the matching radius.
const MATCH_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyDetails {
    pub matching_radius: f64,
    /// Coefficient of `e^{m r}` in `r q(r)` at the matching radius (signed).
    pub growing: f64,
    /// Coefficient of `e^{-m r}` (signed).
    pub decaying: f64,
    pub potential_factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub kernel_mismatch: f64,
    pub is_nondegenerate: bool,
    pub details: NondegeneracyDetails,
}

/// Checks that `-Delta q + m^2 q = 3 Gamma w0^2 q` has no decaying radial
/// solution.
pub fn check_nondegenerate<T: Real>(
    gs: &GroundState<T>,
    m: T,
    gamma0: T,
) -> Result<NondegeneracyReport> {
    let profile = |_: T| gamma0;
    nondegeneracy_scan(gs, m, &profile, T::one())
}

/// Same test with the potential `factor * 3 Gamma w0^2`, the coupling taken
/// from the ground state itself.
pub fn check_nondegenerate_scaled<T: Real>(
    gs: &GroundState<T>,
    factor: T,
) -> Result<NondegeneracyReport> {
    let coupling = gs.coupling.clone();
    let profile = move |r: T| coupling.at(r);
    nondegeneracy_scan(gs, gs.m, &profile, factor)
}

fn nondegeneracy_scan<T: Real>(
    gs: &GroundState<T>,
    m: T,
    gamma: &dyn Fn(T) -> T,
    factor: T,
) -> Result<NondegeneracyReport> {
    let three: T = lit(3.0);
    let potential = |r: T| {
        let w = gs.eval(r);
        factor * three * gamma(r) * w * w
    };
    // smallest radius past which the potential stays below the level
    let level = lit::<T>(MATCH_LEVEL) * m * m;
    let nodes = gs.grid().nodes();
    let mut idx = nodes.len();
    while idx > 0 && potential(nodes[idx - 1]).abs() <= level {
        idx -= 1;
    }
    let r_match = if idx == nodes.len() {
        return Err(Error::IllConditionedTail(format!(
            "potential still above {} m^2 at r_max = {}",
            MATCH_LEVEL,
            to_f64(gs.grid().r_max())
        )));
    } else {
        nodes[idx].max(lit::<T>(2.0) / m)
    };
    if r_match > gs.grid().r_max() {
        return Err(Error::IllConditionedTail(format!(
            "matching radius {} beyond r_max",
            to_f64(r_match)
        )));
    }

    let solver = Dopri::new(lit(1e-14), lit(1e-12));
    let rhs = |r: T, y: &[T; 2]| {
        let (q, p) = (y[0], y[1]);
        let s = (m * m - potential(r)) * q;
        if r == T::zero() {
            [p, s / three]
        } else {
            [p, s - lit::<T>(2.0) * p / r]
        }
    };
    let mut h = T::zero();
    let (_, y) = solver.integrate(rhs, T::zero(), [T::one(), T::zero()], r_match, &mut h, |_, _| {
        Control::Continue
    })?;
    // r q = A e^{m r} + B e^{-m r}
    let yv = r_match * y[0];
    let dy = y[0] + r_match * y[1];
    let grow = (yv + dy / m) / lit(2.0);
    let decay = (yv - dy / m) / lit(2.0);
    let total = grow.abs() + decay.abs();
    if total == T::zero() || !total.is_finite() {
        return Err(Error::IllConditionedTail("regular solution vanished".into()));
    }
    let mismatch = to_f64(grow.abs() / total);
    Ok(NondegeneracyReport {
        kernel_mismatch: mismatch,
        is_nondegenerate: mismatch > NONDEGENERACY_THRESHOLD,
        details: NondegeneracyDetails {
            matching_radius: to_f64(r_match),
            growing: to_f64(grow / total),
            decaying: to_f64(decay / total),
            potential_factor: to_f64(factor),
        },
    })
}
