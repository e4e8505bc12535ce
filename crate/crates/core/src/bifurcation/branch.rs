use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bifurcation::context::BifurcationContext;
use crate::bifurcation::maps::{assemble_jacobian, assemble_map};
use crate::error::{Error, Result};
use crate::krylov::Gmres;
use crate::modes::{mode_norm, ModeSequence};
use crate::radial::{norm_xq, WeightOrder};
use crate::scalar::{lit, to_f64, Real};

/// Newton iterations allowed per branch point.
pub const MAX_NEWTON: usize = 25;

/// Largest system (nodes, modes) solved densely under [`LinearSolver::Auto`].
pub const DENSE_LIMIT: (usize, usize) = (512, 8);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    Auto,
    Dense,
    Gmres,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Target `||F(v, lambda)||_{X_1}`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: MAX_NEWTON,
            solver: LinearSolver::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint<T> {
    pub alpha: T,
    pub lambda: T,
    /// Perturbation `v`; the full state is `w + v`.
    pub v: ModeSequence<T>,
    pub newton_iters: usize,
    /// `||F(v, lambda)||_{X_1}` (or G).
    pub residual: f64,
}

#[derive(Serialize)]
struct BranchPointJson {
    alpha: f64,
    lambda: f64,
    residual: f64,
    newton_iters: usize,
    norms: Vec<f64>,
}

impl<T: Real> BranchPoint<T> {
    /// One JSON line `{alpha, lambda, residual, newton_iters, norms}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&BranchPointJson {
            alpha: to_f64(self.alpha),
            lambda: to_f64(self.lambda),
            residual: self.residual,
            newton_iters: self.newton_iters,
            norms: self.v.entries().iter().map(|e| to_f64(norm_xq(e, WeightOrder::X1))).collect(),
        })
        .expect("branch point serializes")
    }
}

/// Solves the bordered system
/// `[DF, dF/dlambda; l, 0] [dv; dlambda] = [rhs; rhs_phase]`.
fn solve_bordered<T: Real>(
    ctx: &BifurcationContext<T>,
    v: &ModeSequence<T>,
    lambda: T,
    rhs: &ModeSequence<T>,
    rhs_phase: T,
    solver: LinearSolver,
) -> Result<(ModeSequence<T>, T)> {
    let jac = assemble_jacobian(v, lambda, ctx)?;
    let lam_col = jac.lambda_column()?.to_vector();
    let row = ctx.phase_row();
    let n = ctx.grid().len();
    let offset = ctx.s() * n;
    let dim = lam_col.len();
    let mut b = rhs.to_vector();
    b.push(rhs_phase);

    let dense = match solver {
        LinearSolver::Dense => true,
        LinearSolver::Gmres => false,
        LinearSolver::Auto => n <= DENSE_LIMIT.0 && ctx.k_max() <= DENSE_LIMIT.1,
    };
    let x = if dense {
        let mut mat = DMatrix::zeros(dim + 1, dim + 1);
        mat.view_mut((0, 0), (dim, dim)).copy_from(&jac.to_dense()?);
        for i in 0..dim {
            mat[(i, dim)] = lam_col[i];
        }
        for (j, &c) in row.iter().enumerate() {
            mat[(dim, offset + j)] = c;
        }
        mat.lu()
            .solve(&DVector::from_vec(b))
            .ok_or_else(|| Error::LinearSolver("singular bordered matrix".into()))?
            .as_slice()
            .to_vec()
    } else {
        let gmres = Gmres {
            rtol: lit(1e-13),
            restart: 200,
            max_iter: 2000,
        };
        let apply = |x: &[T]| -> Result<Vec<T>> {
            let mut y = jac.apply_flat(&x[..dim])?;
            let dl = x[dim];
            for (yi, &c) in y.iter_mut().zip(&lam_col) {
                *yi += dl * c;
            }
            let phase = row.iter().zip(&x[offset..offset + n]).fold(T::zero(), |a, (&c, &xi)| a + c * xi);
            y.push(phase);
            Ok(y)
        };
        let (x, stats) = gmres.solve(apply, &b)?;
        log::debug!("gmres: {} iterations, residual {:e}", stats.iterations, stats.relative_residual);
        x
    };
    let dl = x[dim];
    Ok((ModeSequence::from_vector(ctx.grid().clone(), ctx.k_max(), &x[..dim])?, dl))
}

fn residual_norm<T: Real>(ctx: &BifurcationContext<T>, v: &ModeSequence<T>, lambda: T) -> Result<(ModeSequence<T>, f64)> {
    let f = assemble_map(v, lambda, ctx)?;
    let r = to_f64(mode_norm(&f, WeightOrder::X1));
    Ok((f, r))
}

/// Newton on `{F(v, lambda) = 0, l(v) = alpha}` from `(v, lambda)`.
pub fn correct<T: Real>(
    ctx: &BifurcationContext<T>,
    alpha: T,
    mut v: ModeSequence<T>,
    mut lambda: T,
    opts: &NewtonOptions,
) -> Result<BranchPoint<T>> {
    let q = ctx.tangent();
    // start exactly on the phase condition
    v = v.axpy(alpha - ctx.phase_functional(&v), q);
    let (mut f, mut res) = residual_norm(ctx, &v, lambda)?;
    let mut history = vec![res];
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(BranchPoint {
                alpha,
                lambda,
                v,
                newton_iters: it,
                residual: res,
            });
        }
        let (dv, dl) = solve_bordered(ctx, &v, lambda, &f.scale(-T::one()), T::zero(), opts.solver)?;
        v = v.add(&dv);
        lambda += dl;
        v = v.axpy(alpha - ctx.phase_functional(&v), q);
        let next = residual_norm(ctx, &v, lambda)?;
        f = next.0;
        res = next.1;
        history.push(res);
        if !res.is_finite() {
            return Err(Error::NewtonDiverged {
                alpha: to_f64(alpha),
                iterations: it + 1,
                residual: res,
            });
        }
        let h = history.len();
        if h >= 4 && res > 0.5 * history[h - 3] && res <= 1e3 * opts.tol.max(1e-12) {
            return Err(Error::NewtonStagnated {
                alpha: to_f64(alpha),
                residual: res,
            });
        }
    }
    if res <= opts.tol {
        return Ok(BranchPoint {
            alpha,
            lambda,
            v,
            newton_iters: opts.max_iter,
            residual: res,
        });
    }
    Err(Error::NewtonDiverged {
        alpha: to_f64(alpha),
        iterations: opts.max_iter,
        residual: res,
    })
}

/// Traces the branch through the given `alpha` values in order. Each point
/// is predicted from the previous points of the same sign (secant), or from
/// `alpha q` for the first one, and corrected by bordered Newton.
pub fn continue_branch<T: Real>(
    ctx: &BifurcationContext<T>,
    alphas: &[T],
    opts: &NewtonOptions,
) -> Result<Vec<BranchPoint<T>>> {
    let mut out: Vec<BranchPoint<T>> = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if alpha == T::zero() {
            out.push(BranchPoint {
                alpha,
                lambda: T::zero(),
                v: ModeSequence::zeros(ctx.grid().clone(), ctx.k_max()),
                newton_iters: 0,
                residual: 0.0,
            });
            continue;
        }
        let same_side: Vec<&BranchPoint<T>> = out
            .iter()
            .filter(|p| p.alpha != T::zero() && (p.alpha > T::zero()) == (alpha > T::zero()))
            .collect();
        let (v0, l0) = match same_side.as_slice() {
            [] => (ctx.tangent().scale(alpha), T::zero()),
            [.., a, b] if a.alpha != b.alpha => {
                let t = (alpha - b.alpha) / (b.alpha - a.alpha);
                (b.v.axpy(t, &b.v.sub(&a.v)), b.lambda + t * (b.lambda - a.lambda))
            }
            [.., b] => {
                let t = alpha / b.alpha;
                (b.v.scale(t), b.lambda * t)
            }
        };
        out.push(correct(ctx, alpha, v0, l0, opts)?);
    }
    Ok(out)
}

/// JSON lines for a branch.
pub fn branch_json_lines<T: Real>(points: &[BranchPoint<T>]) -> String {
    let mut s = String::new();
    for p in points {
        s.push_str(&p.to_json_line());
        s.push('\n');
    }
    s
}
