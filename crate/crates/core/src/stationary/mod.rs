//! Stationary ground state and its nondegeneracy.

pub mod ground_state;
pub mod nondegeneracy;

pub use ground_state::{
    ode_residual, shoot_ground_state, shoot_ground_state_with, GroundState, GroundStateSummary,
};
pub use nondegeneracy::{
    check_nondegenerate, check_nondegenerate_scaled, NondegeneracyReport, NONDEGENERACY_THRESHOLD,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;

    #[test]
    fn unit_ground_state() {
        let grid = make_grid(40.0f64, 2048, 1.0).unwrap();
        let gs = shoot_ground_state(1.0, 1.0, &grid, 1e-8).unwrap();
        assert!(gs.is_positive_decreasing());
        assert!((gs.decay_rate - 1.0).abs() < 0.05);
        assert!(gs.ode_residual < 1e-8, "{}", gs.ode_residual);
        // classical value of the cubic NLS ground state w(0)
        assert!((gs.center_value - 4.337_387).abs() < 1e-5, "{}", gs.center_value);
        let rep = check_nondegenerate(&gs, 1.0, 1.0).unwrap();
        assert!(rep.is_nondegenerate, "{rep:?}");
    }

    #[test]
    fn zero_coupling_has_no_ground_state() {
        let grid = make_grid(40.0f64, 512, 1.0).unwrap();
        assert!(shoot_ground_state(1.0, 0.0, &grid, 1e-8).is_err());
    }
}
