use std::sync::Arc;

use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{invalid, Error, Result};
use crate::ode::{Control, Dopri};
use crate::radial::stencil::laplacian;
use crate::radial::{RadialFn, RadialGrid, RESIDUAL_BUFFER};
use crate::scalar::{lit, to_f64, Real};

/// Tail graft criterion: `Gamma w^2 <= GRAFT_LEVEL * m^2`.
pub const GRAFT_LEVEL: f64 = 1e-10;

/// Stencil used for the reported ODE residual.
const RESIDUAL_POINTS: usize = 15;

/// Positive radially decreasing solution of `-Delta w + m^2 w = Gamma w^3`.
#[derive(Debug, Clone)]
pub struct GroundState<T> {
    pub w0: RadialFn<T>,
    /// `w0'` at the grid nodes.
    pub dw0: Vec<T>,
    pub center_value: T,
    pub decay_rate: T,
    pub ode_residual: T,
    pub m: T,
    pub coupling: Coupling<T>,
    /// Radius beyond which the profile is the linear tail
    /// `w(r_g) (r_g / r) e^{-m (r - r_g)}`.
    pub graft_radius: T,
}

/// JSON summary of a ground state.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateSummary {
    pub m: f64,
    /// `null` for a tabulated coupling.
    pub gamma0: Option<f64>,
    pub center_value: f64,
    pub decay_rate: f64,
    pub ode_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// crosses zero: initial value too large
    Over,
    /// turns back up while still positive: initial value too small
    Under,
}

struct Problem<'a, T> {
    m: T,
    coupling: &'a Coupling<T>,
    solver: Dopri<T>,
}

impl<T: Real> Problem<'_, T> {
    fn rhs(&self, r: T, y: &[T; 2]) -> [T; 2] {
        let (w, p) = (y[0], y[1]);
        let g = self.coupling.at(r);
        let source = self.m * self.m * w - g * w * w * w;
        if r == T::zero() {
            [p, source / lit(3.0)]
        } else {
            [p, source - lit::<T>(2.0) * p / r]
        }
    }

    fn classify(&self, a: T, r_end: T) -> Result<(Shot, T)> {
        let mut verdict = None;
        let mut h = T::zero();
        let (r, _) = self.solver.integrate(
            |r, y| self.rhs(r, y),
            T::zero(),
            [a, T::zero()],
            r_end,
            &mut h,
            |_, y| {
                if y[0] < T::zero() {
                    verdict = Some(Shot::Over);
                    Control::Stop
                } else if y[1] > T::zero() {
                    verdict = Some(Shot::Under);
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        Ok((verdict.unwrap_or(Shot::Under), r))
    }

    /// Linear decaying tail through `(r_g, b)`, value and derivative at `r`.
    fn tail(&self, b: T, r_g: T, r: T) -> [T; 2] {
        let w = b * r_g / r * (-self.m * (r - r_g)).exp();
        [w, -w * (self.m + T::one() / r)]
    }

    /// Outward samples at `out_nodes` followed by `r_mid`, inward samples at
    /// `in_nodes` (descending, starting at `r_g`) followed by `r_mid`. The
    /// tabulation and the matching condition share one integration path.
    fn pieces(
        &self,
        a: T,
        b: T,
        out_nodes: &[T],
        in_nodes: &[T],
    ) -> Result<(Vec<[T; 2]>, Vec<[T; 2]>)> {
        let rhs = |r, y: &[T; 2]| self.rhs(r, y);
        let outward = self.solver.sample(rhs, out_nodes, [a, T::zero()])?;
        let r_g = in_nodes[0];
        let inward = self.solver.sample(rhs, in_nodes, self.tail(b, r_g, r_g))?;
        Ok((outward, inward))
    }

    fn mismatch(&self, a: T, b: T, out_nodes: &[T], in_nodes: &[T]) -> Result<[T; 2]> {
        let (out, inw) = self.pieces(a, b, out_nodes, in_nodes)?;
        let (o, i) = (out.last().unwrap(), inw.last().unwrap());
        Ok([o[0] - i[0], o[1] - i[1]])
    }
}

/// Ground state for a constant coupling `gamma0`.
pub fn shoot_ground_state<T: Real>(
    m: T,
    gamma0: T,
    grid: &Arc<RadialGrid<T>>,
    tol: T,
) -> Result<GroundState<T>> {
    shoot_ground_state_with(m, &Coupling::constant(gamma0), grid, tol)
}

/// Ground state by bisection on `w(0)` followed by a two-sided matching
/// polish, tabulated on `grid`.
pub fn shoot_ground_state_with<T: Real>(
    m: T,
    coupling: &Coupling<T>,
    grid: &Arc<RadialGrid<T>>,
    tol: T,
) -> Result<GroundState<T>> {
    if !(m > T::zero()) || !m.is_finite() {
        return Err(invalid("m", format!("must be positive, got {m}")));
    }
    let g0 = coupling.center();
    if !(g0 > T::zero()) || !(coupling.min_value() >= T::zero()) {
        return Err(Error::NoBracket(format!(
            "coupling must be positive for a positive decaying solution (Gamma(0) = {g0})"
        )));
    }
    let solver = Dopri::new(lit::<T>(1e-15) * m / g0.sqrt(), lit(1e-14));
    let problem = Problem {
        m,
        coupling,
        solver,
    };
    let r_end = grid.r_max().max(lit::<T>(60.0) / m);

    // E = p^2/2 - m^2 w^2/2 + Gamma w^4/4 stays negative below sqrt(2) m / sqrt(Gamma)
    let mut lo = (lit::<T>(2.0)).sqrt() * m / g0.sqrt() * (T::one() - lit(1e-9));
    let (shot, _) = problem.classify(lo, r_end)?;
    if shot != Shot::Under {
        return Err(Error::NoBracket(format!("lower end {lo} does not undershoot")));
    }
    let limit = lo * lit(1e3);
    let mut hi = lo * lit(2.0);
    loop {
        let (shot, _) = problem.classify(hi, r_end)?;
        if shot == Shot::Over {
            break;
        }
        lo = hi;
        hi *= lit(2.0);
        if hi > limit {
            return Err(Error::NoBracket(format!("no overshoot below a = {limit}")));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        match problem.classify(mid, r_end)?.0 {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
        if hi - lo <= lit::<T>(4.0) * T::default_epsilon() * hi {
            break;
        }
    }
    let a0 = lo;
    log::debug!("ground-state bisection bracket [{lo}, {hi}]");

    // Locate the matching and graft radii on the undershooting trajectory.
    let mut r_mid = None;
    let mut graft = None;
    let mut h = T::zero();
    let level: T = lit(GRAFT_LEVEL);
    problem.solver.integrate(
        |r, y| problem.rhs(r, y),
        T::zero(),
        [a0, T::zero()],
        r_end,
        &mut h,
        |r, y| {
            if r_mid.is_none() && y[0] < a0 / lit(4.0) {
                r_mid = Some(r);
            }
            if coupling.at(r) * y[0] * y[0] <= level * m * m {
                graft = Some((r, y[0]));
                return Control::Stop;
            }
            if y[0] < T::zero() || y[1] > T::zero() {
                return Control::Stop;
            }
            Control::Continue
        },
    )?;
    let r_mid = r_mid.ok_or_else(|| Error::Integration("profile never drops below a/4".into()))?;
    let (r_g, b0) = graft.ok_or_else(|| {
        Error::Integration("trajectory left the separatrix before the tail region".into())
    })?;

    let nodes = grid.nodes();
    let n = nodes.len();
    let inner_end = nodes.partition_point(|&r| r < r_mid);
    let graft_start = nodes.partition_point(|&r| r < r_g).max(inner_end);
    let mut out_nodes = nodes[..inner_end].to_vec();
    out_nodes.push(r_mid);
    let mut in_nodes = vec![r_g];
    in_nodes.extend(nodes[inner_end..graft_start].iter().rev());
    in_nodes.push(r_mid);

    // Newton on (a, b) for continuity of w and w' at r_mid.
    let (mut a, mut b) = (a0, b0);
    let mut last = T::zero();
    for _ in 0..20 {
        let f = problem.mismatch(a, b, &out_nodes, &in_nodes)?;
        let da = a * lit(1e-7);
        let db = b * lit(1e-6);
        let fa = problem.mismatch(a + da, b, &out_nodes, &in_nodes)?;
        let fb = problem.mismatch(a, b + db, &out_nodes, &in_nodes)?;
        let j = [
            [(fa[0] - f[0]) / da, (fb[0] - f[0]) / db],
            [(fa[1] - f[1]) / da, (fb[1] - f[1]) / db],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == T::zero() {
            break;
        }
        let step_a = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let step_b = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        a -= step_a;
        b -= step_b;
        last = f[0].abs() + f[1].abs();
        if step_a.abs() <= lit::<T>(1e-15) * a && step_b.abs() <= lit::<T>(1e-13) * b.abs() {
            break;
        }
    }
    log::debug!("ground-state matching: a = {a}, tail value {b} at {r_g}, mismatch {last}");

    // Tabulate.
    let (outward, inward) = problem.pieces(a, b, &out_nodes, &in_nodes)?;
    let mut w = vec![T::zero(); n];
    let mut dw = vec![T::zero(); n];
    for (i, y) in outward.iter().take(inner_end).enumerate() {
        w[i] = y[0];
        dw[i] = y[1];
    }
    for (k, y) in inward.iter().enumerate().take(in_nodes.len() - 1).skip(1) {
        let i = graft_start - k;
        w[i] = y[0];
        dw[i] = y[1];
    }
    for i in graft_start..n {
        let y = problem.tail(b, r_g, nodes[i]);
        w[i] = y[0];
        dw[i] = y[1];
    }
    let w0 = RadialFn::new(grid.clone(), w)?;

    let gamma = coupling.sample(grid);
    let ode_residual = ode_residual(&w0, m, &gamma);
    let decay_rate = fit_decay_rate(&w0, m, coupling, r_g);
    let gs = GroundState {
        w0,
        dw0: dw,
        center_value: a,
        decay_rate,
        ode_residual,
        m,
        coupling: coupling.clone(),
        graft_radius: r_g,
    };
    if ode_residual > tol {
        return Err(Error::GroundStateResidual {
            residual: to_f64(ode_residual),
            tolerance: to_f64(tol),
        });
    }
    Ok(gs)
}

/// Max of `|w'' + (2/r) w' - m^2 w + Gamma w^3|` over the nodes outside the
/// outer buffer, by high-order finite differences.
pub fn ode_residual<T: Real>(w: &RadialFn<T>, m: T, gamma: &RadialFn<T>) -> T {
    let lap = laplacian(w.grid(), w.values(), RESIDUAL_POINTS);
    let end = w.grid().interior_end(RESIDUAL_BUFFER);
    (0..end).fold(T::zero(), |acc, i| {
        let v = w.values()[i];
        acc.max((lap[i] - m * m * v + gamma.values()[i] * v * v * v).abs())
    })
}

/// Least-squares slope of `-ln(r w)` where the nonlinearity is weak.
fn fit_decay_rate<T: Real>(w: &RadialFn<T>, m: T, coupling: &Coupling<T>, r_g: T) -> T {
    let upper = (r_g + lit::<T>(5.0) / m).min(w.grid().r_max());
    let (mut sx, mut sy, mut sxx, mut sxy, mut count) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&r, &v) in w.grid().nodes().iter().zip(w.values()) {
        if r == T::zero() || r > upper || v <= T::zero() {
            continue;
        }
        if coupling.at(r) * v * v > lit::<T>(1e-4) * m * m {
            continue;
        }
        let y = (r * v).ln();
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
        count += T::one();
    }
    let den = count * sxx - sx * sx;
    if count < lit(2.0) || den == T::zero() {
        return T::zero();
    }
    -(count * sxy - sx * sy) / den
}

impl<T: Real> GroundState<T> {
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        self.w0.grid()
    }

    /// `w0(r)` between nodes by quintic Hermite interpolation of the stored
    /// values, slopes and ODE curvatures; past `r_max` the linear tail.
    pub fn eval(&self, r: T) -> T {
        let nodes = self.grid().nodes();
        let n = nodes.len();
        if r >= nodes[n - 1] {
            let (rm, wm) = (nodes[n - 1], self.w0.values()[n - 1]);
            return wm * rm / r * (-self.m * (r - rm)).exp();
        }
        let i = nodes.partition_point(|&x| x <= r).max(1) - 1;
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (y0, y1) = (self.w0.values()[i], self.w0.values()[i + 1]);
        let (d0, d1) = (self.dw0[i] * h, self.dw0[i + 1] * h);
        let (c0, c1) = (self.curvature(i) * h * h, self.curvature(i + 1) * h * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let l = |x: f64| lit::<T>(x);
        let h00 = T::one() - l(10.0) * t3 + l(15.0) * t4 - l(6.0) * t5;
        let h01 = l(10.0) * t3 - l(15.0) * t4 + l(6.0) * t5;
        let h10 = t - l(6.0) * t3 + l(8.0) * t4 - l(3.0) * t5;
        let h11 = -l(4.0) * t3 + l(7.0) * t4 - l(3.0) * t5;
        let h20 = (t2 - l(3.0) * t3 + l(3.0) * t4 - t5) / l(2.0);
        let h21 = (t3 - l(2.0) * t4 + t5) / l(2.0);
        h00 * y0 + h01 * y1 + h10 * d0 + h11 * d1 + h20 * c0 + h21 * c1
    }

    /// `w0''` at node `i` from the ODE.
    fn curvature(&self, i: usize) -> T {
        let r = self.grid().nodes()[i];
        let w = self.w0.values()[i];
        let source = self.m * self.m * w - self.coupling.at(r) * w * w * w;
        if r == T::zero() {
            source / lit(3.0)
        } else {
            source - lit::<T>(2.0) * self.dw0[i] / r
        }
    }

    /// Positivity and strict monotone decrease at the grid nodes.
    pub fn is_positive_decreasing(&self) -> bool {
        let v = self.w0.values();
        v.iter().all(|&x| x > T::zero())
            && v.windows(2).all(|p| p[1] < p[0])
            && self.dw0.iter().skip(1).all(|&d| d < T::zero())
    }

    pub fn summary(&self) -> GroundStateSummary {
        GroundStateSummary {
            m: to_f64(self.m),
            gamma0: self.coupling.as_constant().map(to_f64),
            center_value: to_f64(self.center_value),
            decay_rate: to_f64(self.decay_rate),
            ode_residual: to_f64(self.ode_residual),
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        self.w0.to_csv()
    }

    /// Rebuilds a ground state from an exported profile. Slopes are
    /// recomputed by finite differences.
    pub fn from_profile(w0: RadialFn<T>, m: T, coupling: Coupling<T>) -> Result<Self> {
        let grid = w0.grid().clone();
        let dw0 = crate::radial::stencil::derivative(&grid, w0.values(), RESIDUAL_POINTS);
        let gamma = coupling.sample(&grid);
        let residual = ode_residual(&w0, m, &gamma);
        let graft = {
            let level: T = lit(GRAFT_LEVEL);
            let idx = grid
                .nodes()
                .iter()
                .zip(w0.values())
                .position(|(&r, &v)| coupling.at(r) * v * v <= level * m * m)
                .unwrap_or(grid.len() - 1);
            grid.nodes()[idx]
        };
        let decay_rate = fit_decay_rate(&w0, m, &coupling, graft);
        Ok(Self {
            center_value: w0.origin_value(),
            w0,
            dw0,
            decay_rate,
            ode_residual: residual,
            m,
            coupling,
            graft_radius: graft,
        })
    }
}
