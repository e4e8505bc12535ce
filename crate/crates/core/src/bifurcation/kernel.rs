use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use crate::bifurcation::context::{BifurcationContext, NODES_PER_WAVELENGTH};
use crate::bifurcation::maps::assemble_jacobian;
use crate::error::{invalid, Error, Result};
use crate::helmholtz::{HelmholtzKernel, SchrodingerKernel};
use crate::modes::{mode_norm, ModeSequence};
use crate::radial::{fourier_profile, make_grid, RadialFn, RadialGrid, WeightOrder};
use crate::scalar::{lit, to_f64, Real};

/// Largest accepted `||DF(0,0)[q]||_{X_1} / ||q||_{X_1}`.
pub const KERNEL_TOLERANCE: f64 = 1e-6;

/// Required ratio between the second-smallest and smallest singular value.
pub const GAP_RATIO: f64 = 1e3;

/// Relative least-squares residual (and relative Fourier value) above which
/// the lambda-derivative counts as outside the range.
pub const TRANSVERSALITY_THRESHOLD: f64 = 1e-3;

/// Radius of the coarse grid for the dense spectrum.
pub const COARSE_RADIUS: f64 = 20.0;

/// Coarse grid for the dense block spectrum of `DF(0,0)`.
#[derive(Debug, Clone, Copy)]
pub struct CoarseGrid {
    pub r_max: f64,
    pub n: usize,
}

impl CoarseGrid {
    /// Radius [`COARSE_RADIUS`] with the spacing rule of the fastest mode.
    pub fn for_context<T: Real>(ctx: &BifurcationContext<T>) -> Self {
        let rho = to_f64(ctx.mu[ctx.k_max()]).sqrt();
        let h = 2.0 * std::f64::consts::PI / rho / NODES_PER_WAVELENGTH;
        Self {
            r_max: COARSE_RADIUS,
            n: (COARSE_RADIUS / h).ceil() as usize + 1,
        }
    }

    pub fn refined(self) -> Self {
        Self {
            r_max: self.r_max,
            n: 2 * self.n - 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSpectrum {
    pub k: usize,
    pub smallest: f64,
    pub second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralGap {
    pub r_max: f64,
    pub n: usize,
    pub blocks: Vec<BlockSpectrum>,
    pub smallest: f64,
    pub second_smallest: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    /// Relative residual of the least-squares solve on the coarse grid
    /// (kernel singular value dropped); `None` in the G case or when the
    /// block is too ill-conditioned to decide.
    pub least_squares_residual: Option<f64>,
    /// `f^(Gamma w0^2 q_s)(sqrt(mu_s))`, or `alpha + beta` of `q_s` in the G case.
    pub fourier_value: f64,
    /// `fourier_value` relative to its trivial bound.
    pub fourier_relative: f64,
    pub least_squares_verdict: Option<bool>,
    pub fourier_verdict: bool,
    pub transversal: bool,
    pub criteria_agree: bool,
}

#[derive(Debug, Clone)]
pub struct KernelReport<T> {
    pub q: ModeSequence<T>,
    pub defect: f64,
    pub spectrum: Option<SpectralGap>,
}

#[derive(Serialize)]
struct KernelJson<'a> {
    defect: f64,
    tolerance: f64,
    spectrum: &'a Option<SpectralGap>,
    q_norm: f64,
}

impl<T: Real> KernelReport<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KernelJson {
            defect: self.defect,
            tolerance: KERNEL_TOLERANCE,
            spectrum: &self.spectrum,
            q_norm: to_f64(mode_norm(&self.q, WeightOrder::X1)),
        })
        .expect("report serializes")
    }
}

impl TransversalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `||DF(0,0)[q]||_{X_1} / ||q||_{X_1}`.
pub fn kernel_defect<T: Real>(ctx: &BifurcationContext<T>, q: &ModeSequence<T>) -> Result<f64> {
    let zero = ModeSequence::zeros(ctx.grid().clone(), ctx.k_max());
    let jac = assemble_jacobian(&zero, T::zero(), ctx)?;
    let image = jac.apply(q)?;
    Ok(to_f64(mode_norm(&image, WeightOrder::X1) / mode_norm(q, WeightOrder::X1)))
}

/// The tangent `q` (only mode `s` nonzero), its defect under `DF(0,0)` and,
/// in the F case, the singular-value gap of the dense blocks on `coarse`.
pub fn kernel_at_origin<T: Real>(
    ctx: &BifurcationContext<T>,
    coarse: Option<CoarseGrid>,
) -> Result<KernelReport<T>> {
    let q = ctx.tangent().clone();
    let defect = kernel_defect(ctx, &q)?;
    if !(defect <= KERNEL_TOLERANCE) {
        return Err(Error::KernelDefect {
            defect,
            tolerance: KERNEL_TOLERANCE,
        });
    }
    let spectrum = match (coarse, ctx.g_case()) {
        (Some(c), false) => {
            let gap = spectral_gap(ctx, c)?;
            if !(gap.ratio >= GAP_RATIO) {
                return Err(Error::KernelNotSimple {
                    ratio: gap.ratio,
                    required: GAP_RATIO,
                });
            }
            Some(gap)
        }
        _ => None,
    };
    Ok(KernelReport { q, defect, spectrum })
}

fn coarse_grid<T: Real>(ctx: &BifurcationContext<T>, c: CoarseGrid) -> Result<Arc<RadialGrid<T>>> {
    if c.r_max > to_f64(ctx.grid().r_max()) {
        return Err(invalid("coarse", "coarse radius beyond the context grid"));
    }
    make_grid(lit(c.r_max), c.n, T::one())
}

/// Dense block `I - 3 R_k[Gamma w0^2 .]` of `DF(0,0)` on `grid` (F case).
pub fn origin_block<T: Real>(ctx: &BifurcationContext<T>, k: usize, grid: &Arc<RadialGrid<T>>) -> Result<DMatrix<T>> {
    if ctx.g_case() && k == ctx.s() {
        return Err(Error::Precondition("dense excited block only in the F case".into()));
    }
    let three: T = lit(3.0);
    let potential: Vec<T> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let w = ctx.gs.eval(r);
            three * ctx.coupling.at(r) * w * w
        })
        .collect();
    let n = grid.len();
    let resolve: Box<dyn Fn(&RadialFn<T>) -> Result<RadialFn<T>>> = if k == 0 {
        let kern = SchrodingerKernel::new(grid.clone(), ctx.m * ctx.m)?;
        Box::new(move |f| kern.apply(f))
    } else {
        let kern = HelmholtzKernel::new(grid.clone(), ctx.mu[k])?;
        let tau = ctx.plan.tau(k);
        Box::new(move |f| kern.resolve(tau, f))
    };
    let mut mat = DMatrix::identity(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = potential[j];
        let col = resolve(&RadialFn::new(grid.clone(), e.clone())?)?;
        e[j] = T::zero();
        for (i, &v) in col.values().iter().enumerate() {
            mat[(i, j)] -= v;
        }
    }
    Ok(mat)
}

fn two_smallest<T: Real>(values: &DVector<T>) -> (usize, f64, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    (idx[0], to_f64(values[idx[0]]), to_f64(values[idx[1]]))
}

/// Two smallest singular values of every diagonal block of `DF(0,0)` on a
/// coarse grid; `DF(0,0)` is block diagonal in the modes.
pub fn spectral_gap<T: Real>(ctx: &BifurcationContext<T>, coarse: CoarseGrid) -> Result<SpectralGap> {
    let grid = coarse_grid(ctx, coarse)?;
    let mut blocks = Vec::with_capacity(ctx.k_max() + 1);
    let mut all = Vec::new();
    for k in 0..=ctx.k_max() {
        let sv = origin_block(ctx, k, &grid)?.singular_values();
        let (_, a, b) = two_smallest(&sv);
        blocks.push(BlockSpectrum { k, smallest: a, second: b });
        all.push(a);
        all.push(b);
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SpectralGap {
        r_max: coarse.r_max,
        n: coarse.n,
        blocks,
        smallest: all[0],
        second_smallest: all[1],
        ratio: all[1] / all[0],
    })
}

/// Relative residual of the least-squares problem `M x = b` after dropping
/// the smallest singular value of `M`, i.e. the component of `b` along the
/// left singular vector of the (near) kernel.
pub fn range_defect<T: Real>(block: &DMatrix<T>, b: &DVector<T>) -> Result<f64> {
    let svd = SVD::new(block.clone(), true, false);
    let u = svd.u.as_ref().ok_or_else(|| Error::LinearSolver("SVD without U".into()))?;
    let (i0, _, _) = two_smallest(&svd.singular_values);
    let b_norm = b.norm();
    if b_norm == T::zero() {
        return Err(invalid("b", "zero right-hand side"));
    }
    Ok(to_f64(u.column(i0).dot(b).abs() / b_norm))
}

/// Decides `d_lambda DF(0,0)[q] not in ran DF(0,0)` by the least-squares
/// residual on the coarse grid and by the Fourier criterion
/// `f^(Gamma w0^2 q_s)(sqrt(mu_s)) != 0` on the context grid.
pub fn transversality_check<T: Real>(
    ctx: &BifurcationContext<T>,
    q: &ModeSequence<T>,
    coarse: Option<CoarseGrid>,
) -> Result<TransversalityReport> {
    let s = ctx.s();
    let qs = q.entry(s);
    let (fourier_value, fourier_relative) = if ctx.g_case() {
        let functional = to_f64(ctx.far_field_sum(qs)?);
        let scale = to_f64(qs.max_abs());
        (functional, functional.abs() / scale)
    } else {
        let w0 = &ctx.gs.w0;
        let f = ctx.gamma().mul(w0).mul(w0).mul(qs);
        let rho = ctx.mu[s].sqrt();
        let value = fourier_profile(&f, rho)?;
        let abs_moment = ctx.grid().integrate(
            &f.values()
                .iter()
                .zip(ctx.grid().nodes())
                .map(|(&v, &r)| v.abs() * r)
                .collect::<Vec<_>>(),
        );
        let bound = (lit::<T>(2.0) / T::pi()).sqrt() / rho * abs_moment;
        (to_f64(value), to_f64(value.abs() / bound))
    };
    let fourier_verdict = fourier_relative >= TRANSVERSALITY_THRESHOLD;

    let least_squares_residual = match (coarse, ctx.g_case()) {
        (Some(c), false) => {
            let grid = coarse_grid(ctx, c)?;
            let block = origin_block(ctx, s, &grid)?;
            let svd = SVD::new(block.clone(), false, true);
            let v_t = svd.v_t.as_ref().ok_or_else(|| Error::LinearSolver("SVD without V".into()))?;
            let (i0, small, second) = two_smallest(&svd.singular_values);
            if second < 10.0 * small {
                None
            } else {
                // coarse kernel vector and its lambda-derivative image
                let p: Vec<T> = v_t.row(i0).iter().copied().collect();
                let p = RadialFn::new(grid.clone(), p)?;
                let kern = HelmholtzKernel::new(grid.clone(), ctx.mu[s])?;
                let three: T = lit(3.0);
                let vp = RadialFn::from_fn(grid.clone(), |r| {
                    let w = ctx.gs.eval(r);
                    three * ctx.coupling.at(r) * w * w
                })
                .mul(&p);
                let b = kern.psi_tilde(&vp)?;
                Some(range_defect(&block, &DVector::from_column_slice(b.values()))?)
            }
        }
        _ => None,
    };
    let least_squares_verdict = least_squares_residual.map(|r| r >= TRANSVERSALITY_THRESHOLD);
    let transversal = least_squares_verdict.unwrap_or(fourier_verdict);
    Ok(TransversalityReport {
        least_squares_residual,
        fourier_value,
        fourier_relative,
        least_squares_verdict,
        fourier_verdict,
        transversal,
        criteria_agree: least_squares_verdict.is_none_or(|v| v == fourier_verdict),
    })
}
