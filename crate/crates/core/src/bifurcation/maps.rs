use nalgebra::DMatrix;

use crate::bifurcation::context::BifurcationContext;
use crate::error::{Error, Result};
use crate::modes::{convolve3, ModeSequence};
use crate::radial::RadialFn;
use crate::scalar::{lit, Real};

fn check_input<T: Real>(ctx: &BifurcationContext<T>, v: &ModeSequence<T>) -> Result<()> {
    v.ensure_compatible(ctx.trivial())
}

/// `Gamma (u * u * u)_k` for `u = w + v`, `k = 0..=K`.
fn cubic_sources<T: Real>(ctx: &BifurcationContext<T>, v: &ModeSequence<T>) -> Result<ModeSequence<T>> {
    let u = v.add(ctx.trivial());
    let c = convolve3(&u, &u, &u, ctx.k_max())?;
    Ok(c.map_modes(|_, e| ctx.gamma().mul(e)))
}

/// Shared rows `k != s` of F and G.
fn common_rows<T: Real>(
    ctx: &BifurcationContext<T>,
    v: &ModeSequence<T>,
    src: &ModeSequence<T>,
    out: &mut Vec<RadialFn<T>>,
) -> Result<()> {
    for k in 0..=ctx.k_max() {
        if k == ctx.s() {
            out.push(RadialFn::zeros(ctx.grid().clone()));
            continue;
        }
        let image = if k == 0 {
            ctx.resolve_mode(0, &src.entry(0).sub(ctx.gamma_w0_cubed()))?
        } else {
            ctx.resolve_mode(k, src.entry(k))?
        };
        out.push(v.entry(k).sub(&image));
    }
    Ok(())
}

/// `F(v, lambda)`; requires `sigma_s != 0`.
pub fn assemble_f<T: Real>(v: &ModeSequence<T>, lambda: T, ctx: &BifurcationContext<T>) -> Result<ModeSequence<T>> {
    check_input(ctx, v)?;
    if ctx.g_case() {
        return Err(Error::Precondition(
            "sigma_s = 0: the excited row of F is undefined, use G".into(),
        ));
    }
    let src = cubic_sources(ctx, v)?;
    let mut rows = Vec::with_capacity(ctx.k_max() + 1);
    common_rows(ctx, v, &src, &mut rows)?;
    let s = ctx.s();
    rows[s] = v.entry(s).sub(&ctx.resolve_excited_f(src.entry(s), lambda)?);
    ModeSequence::new(rows)
}

/// `G(v, lambda)`; requires `sigma_s = 0`.
pub fn assemble_g<T: Real>(v: &ModeSequence<T>, lambda: T, ctx: &BifurcationContext<T>) -> Result<ModeSequence<T>> {
    check_input(ctx, v)?;
    if !ctx.g_case() {
        return Err(Error::NotGCase);
    }
    let src = cubic_sources(ctx, v)?;
    let mut rows = Vec::with_capacity(ctx.k_max() + 1);
    common_rows(ctx, v, &src, &mut rows)?;
    let s = ctx.s();
    let vs = v.entry(s);
    let functional = ctx.far_field_sum(vs)?;
    rows[s] = vs
        .sub(&ctx.psi_conv_s(src.entry(s))?)
        .axpy(-(T::one() - lambda) * functional, ctx.psi_tilde_s());
    ModeSequence::new(rows)
}

/// F or G, whichever the phase plan selects.
pub fn assemble_map<T: Real>(v: &ModeSequence<T>, lambda: T, ctx: &BifurcationContext<T>) -> Result<ModeSequence<T>> {
    if ctx.g_case() {
        assemble_g(v, lambda, ctx)
    } else {
        assemble_f(v, lambda, ctx)
    }
}

/// Linearization of F (or G) at `(v, lambda)`.
pub struct Linearization<'a, T: Real> {
    ctx: &'a BifurcationContext<T>,
    v: ModeSequence<T>,
    u: ModeSequence<T>,
    lambda: T,
}

/// `D_v F(v, lambda)` (or `D_v G`) as a linear map.
pub fn assemble_jacobian<'a, T: Real>(
    v: &ModeSequence<T>,
    lambda: T,
    ctx: &'a BifurcationContext<T>,
) -> Result<Linearization<'a, T>> {
    check_input(ctx, v)?;
    Ok(Linearization {
        ctx,
        v: v.clone(),
        u: v.add(ctx.trivial()),
        lambda,
    })
}

impl<'a, T: Real> Linearization<'a, T> {
    /// `q -> q - 3 Resolvent_k[Gamma (q * u * u)_k]` with the excited-row
    /// terms of F or G.
    pub fn apply(&self, q: &ModeSequence<T>) -> Result<ModeSequence<T>> {
        check_input(self.ctx, q)?;
        let ctx = self.ctx;
        let three: T = lit(3.0);
        let c = convolve3(q, &self.u, &self.u, ctx.k_max())?;
        let s = ctx.s();
        let mut rows = Vec::with_capacity(ctx.k_max() + 1);
        for k in 0..=ctx.k_max() {
            let f = ctx.gamma().mul(c.entry(k)).scale(three);
            let row = if k == s {
                if ctx.g_case() {
                    let functional = ctx.far_field_sum(q.entry(s))?;
                    q.entry(s)
                        .sub(&ctx.psi_conv_s(&f)?)
                        .axpy(-(T::one() - self.lambda) * functional, ctx.psi_tilde_s())
                } else {
                    q.entry(s).sub(&ctx.resolve_excited_f(&f, self.lambda)?)
                }
            } else {
                q.entry(k).sub(&ctx.resolve_mode(k, &f)?)
            };
            rows.push(row);
        }
        ModeSequence::new(rows)
    }

    /// `d/d lambda` of the map at `(v, lambda)`; nonzero only in row `s`.
    pub fn lambda_column(&self) -> Result<ModeSequence<T>> {
        let ctx = self.ctx;
        let s = ctx.s();
        let col = if ctx.g_case() {
            ctx.psi_tilde_s().scale(ctx.far_field_sum(self.v.entry(s))?)
        } else {
            let c = convolve3(&self.u, &self.u, &self.u, ctx.k_max())?;
            ctx.psi_tilde_conv_s(&ctx.gamma().mul(c.entry(s)))?
        };
        ModeSequence::single(ctx.k_max(), s, col)
    }

    /// `d/d lambda D F(v, lambda)[q]`; nonzero only in row `s`.
    pub fn dlambda_apply(&self, q: &ModeSequence<T>) -> Result<ModeSequence<T>> {
        let ctx = self.ctx;
        let s = ctx.s();
        let col = if ctx.g_case() {
            ctx.psi_tilde_s().scale(ctx.far_field_sum(q.entry(s))?)
        } else {
            let c = convolve3(q, &self.u, &self.u, ctx.k_max())?;
            ctx.psi_tilde_conv_s(&ctx.gamma().mul(c.entry(s)).scale(lit(3.0)))?
        };
        ModeSequence::single(ctx.k_max(), s, col)
    }

    /// Flat-vector form of [`Self::apply`].
    pub fn apply_flat(&self, x: &[T]) -> Result<Vec<T>> {
        let q = ModeSequence::from_vector(self.ctx.grid().clone(), self.ctx.k_max(), x)?;
        Ok(self.apply(&q)?.to_vector())
    }

    /// Dense matrix over (mode, node), mode-major, built column by column
    /// from the matrix-free action.
    pub fn to_dense(&self) -> Result<DMatrix<T>> {
        let dim = self.ctx.grid().len() * (self.ctx.k_max() + 1);
        let mut mat = DMatrix::zeros(dim, dim);
        let mut e = vec![T::zero(); dim];
        for j in 0..dim {
            e[j] = T::one();
            let col = self.apply_flat(&e)?;
            e[j] = T::zero();
            mat.column_mut(j).copy_from_slice(&col);
        }
        Ok(mat)
    }
}
