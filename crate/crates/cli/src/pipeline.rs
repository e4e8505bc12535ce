//! Stages of the solver and their artifacts.
//!
//! | stage          | writes                                            |
//! |----------------|---------------------------------------------------|
//! | `ground-state` | `ground_state.csv`, `ground_state.json`           |
//! | `phases`       | `phase_plan.json`                                 |
//! | `kernel`       | `kernel.json`                                     |
//! | `branch`       | `branch.jsonl`, `branch/point_<i>/mode_<k>.csv`   |
//! | `verify`       | `breather_<i>.csv`, `verification.json`           |
//!
//! Every stage after the first reads what it needs from the output
//! directory, so stages can be rerun one at a time.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use breather_core::bifurcation::{
    continue_branch, kernel_at_origin, transversality_check, BifurcationContext, BranchPoint, CoarseGrid,
    LinearSolver, NewtonOptions,
};
use breather_core::breather::{assemble_breather, full_modes, mode_excitation_report, verify_point};
use breather_core::coupling::Coupling;
use breather_core::linearized::{compute_mode_phase, plan_phases_with};
use breather_core::modes::tail_decay_report;
use breather_core::radial::make_grid;
use breather_core::scalar::phase_distance;
use breather_core::stationary::{check_nondegenerate_scaled, shoot_ground_state_with};
use breather_core::{BranchPoint64, Context64, Coupling64, GroundState64, ModeSequence64, PhasePlan64, RadialFn64, RadialGrid};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{GammaSource, SolverConfig};

/// Order of growth used for the tail-decay report of branch points.
const TAIL_ORDER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GroundState,
    Phases,
    Kernel,
    Branch,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::GroundState, Stage::Phases, Stage::Kernel, Stage::Branch, Stage::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GroundState => "ground-state",
            Stage::Phases => "phases",
            Stage::Kernel => "kernel",
            Stage::Branch => "branch",
            Stage::Verify => "verify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}` (expected one of ground-state, phases, kernel, branch, verify)"))
    }
}

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

fn fail(stage: Stage) -> impl Fn(breather_core::Error) -> StageError {
    move |e| StageError {
        stage,
        message: e.to_string(),
    }
}

fn gate(stage: Stage, message: String) -> StageError {
    StageError { stage, message }
}

/// Solver state shared by the stages of one run.
pub struct Pipeline {
    pub cfg: SolverConfig,
    grid: Arc<RadialGrid<f64>>,
}

impl Pipeline {
    pub fn new(cfg: SolverConfig) -> Result<Self, StageError> {
        let g = &cfg.grid;
        let grid = make_grid(g.r_max, g.n, g.grading).map_err(fail(Stage::GroundState))?;
        Ok(Self { cfg, grid })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, stage: Stage, name: &str, text: &str) -> Result<(), StageError> {
        fs::create_dir_all(&self.cfg.out)
            .and_then(|_| fs::write(self.path(name), text))
            .map_err(|e| gate(stage, format!("writing {name}: {e}")))
    }

    fn read(&self, stage: Stage, name: &str) -> Result<String, StageError> {
        fs::read_to_string(self.path(name)).map_err(|e| {
            gate(stage, format!("reading {} (run the earlier stages first): {e}", self.path(name).display()))
        })
    }

    fn coupling(&self) -> Result<Coupling64, StageError> {
        match &self.cfg.gamma {
            GammaSource::Constant(g) => Ok(Coupling::constant(*g)),
            GammaSource::Profile(path) => {
                let profile = load_profile(path, &self.grid).map_err(|m| gate(Stage::GroundState, m))?;
                Coupling::profile(profile).map_err(fail(Stage::GroundState))
            }
        }
    }

    /// Shoots the ground state and checks nondegeneracy.
    pub fn ground_state(&self) -> Result<GroundState64, StageError> {
        let st = Stage::GroundState;
        let coupling = self.coupling()?;
        let gs = shoot_ground_state_with(self.cfg.m, &coupling, &self.grid, self.cfg.tolerances.residual)
            .map_err(fail(st))?;
        let nd = check_nondegenerate_scaled(&gs, 1.0).map_err(fail(st))?;
        self.write(st, "ground_state.csv", &gs.to_csv())?;
        let doc = json!({ "summary": gs.summary(), "nondegeneracy": nd });
        self.write(st, "ground_state.json", &pretty(&doc))?;
        if !nd.is_nondegenerate {
            return Err(gate(
                st,
                format!("nondegeneracy: kernel mismatch {:.3e}, the linearized operator has a decaying solution", nd.kernel_mismatch),
            ));
        }
        Ok(gs)
    }

    pub fn load_ground_state(&self) -> Result<GroundState64, StageError> {
        let st = Stage::GroundState;
        let w0 = RadialFn64::from_csv(self.grid.clone(), &self.read(st, "ground_state.csv")?).map_err(fail(st))?;
        GroundState64::from_profile(w0, self.cfg.m, self.coupling()?).map_err(fail(st))
    }

    fn phases_with(&self, gs: &GroundState64, overrides: &[(usize, f64)]) -> Result<PhasePlan64, StageError> {
        let st = Stage::Phases;
        let cfg = &self.cfg;
        let coupling = self.coupling()?;
        let phases = (1..=cfg.k_max)
            .map(|k| compute_mode_phase(k, cfg.m, cfg.omega, &coupling, gs))
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail(st))?;
        plan_phases_with(cfg.s, cfg.k_max, phases, overrides).map_err(fail(st))
    }

    /// Phases of modes `1..=K`, checked by the two methods, and the plan.
    pub fn phases(&self, gs: &GroundState64) -> Result<PhasePlan64, StageError> {
        let st = Stage::Phases;
        let plan = self.phases_with(gs, &self.cfg.tau_overrides)?;
        self.write(st, "phase_plan.json", &plan.to_json())?;
        for e in &plan.entries {
            let d = phase_distance(e.sigma_k, e.prufer_sigma);
            if d > self.cfg.tolerances.phase {
                return Err(gate(
                    st,
                    format!("sigma_{}: fit and Prufer phases differ by {d:.3e} (tolerance {:.1e})", e.k, self.cfg.tolerances.phase),
                ));
            }
        }
        Ok(plan)
    }

    /// Recomputes the phases and applies the `tau_k` stored in `phase_plan.json`.
    pub fn load_plan(&self, gs: &GroundState64) -> Result<PhasePlan64, StageError> {
        let st = Stage::Phases;
        let doc: Value = serde_json::from_str(&self.read(st, "phase_plan.json")?)
            .map_err(|e| gate(st, format!("phase_plan.json: {e}")))?;
        let taus = doc["modes"]
            .as_array()
            .ok_or_else(|| gate(st, "phase_plan.json: missing `modes`".into()))?
            .iter()
            .map(|m| match (m["k"].as_u64(), m["tau_k"].as_f64()) {
                (Some(k), Some(t)) => Ok((k as usize, t)),
                _ => Err(gate(st, "phase_plan.json: malformed mode entry".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.phases_with(gs, &taus)
    }

    /// Kernel of `DF(0,0)`, its simplicity and transversality.
    pub fn kernel(&self, gs: GroundState64, plan: PhasePlan64) -> Result<Context64, StageError> {
        let st = Stage::Kernel;
        let ctx = BifurcationContext::new(self.cfg.m, self.cfg.omega, self.coupling()?, gs, plan).map_err(fail(st))?;
        let coarse = CoarseGrid::for_context(&ctx);
        let report = kernel_at_origin(&ctx, Some(coarse)).map_err(fail(st))?;
        let tr = transversality_check(&ctx, &report.q, Some(coarse)).map_err(fail(st))?;
        let doc = json!({
            "kernel": parse(&report.to_json()),
            "transversality": tr,
        });
        self.write(st, "kernel.json", &pretty(&doc))?;
        if !tr.transversal {
            return Err(gate(
                st,
                format!("transversality: Fourier criterion {:.3e}, least squares {:?}", tr.fourier_relative, tr.least_squares_residual),
            ));
        }
        if !tr.criteria_agree {
            return Err(gate(st, "transversality: least-squares and Fourier criteria disagree".into()));
        }
        Ok(ctx)
    }

    /// Context for the later stages, rebuilt from the stored artifacts.
    pub fn load_context(&self) -> Result<Context64, StageError> {
        let gs = self.load_ground_state()?;
        let plan = self.load_plan(&gs)?;
        BifurcationContext::new(self.cfg.m, self.cfg.omega, self.coupling()?, gs, plan).map_err(fail(Stage::Kernel))
    }

    /// Continues the branch through the configured amplitudes.
    pub fn branch(&self, ctx: &Context64) -> Result<Vec<BranchPoint64>, StageError> {
        let st = Stage::Branch;
        let opts = NewtonOptions {
            tol: self.cfg.tolerances.newton,
            solver: LinearSolver::Auto,
            ..NewtonOptions::default()
        };
        let points = continue_branch(ctx, &self.cfg.alphas, &opts).map_err(fail(st))?;
        let mut lines = String::new();
        for (i, p) in points.iter().enumerate() {
            p.v.write_dir(&self.branch_dir(i)).map_err(fail(st))?;
            lines.push_str(&p.to_json_line());
            lines.push('\n');
        }
        self.write(st, "branch.jsonl", &lines)?;
        Ok(points)
    }

    fn branch_dir(&self, i: usize) -> PathBuf {
        self.cfg.out.join("branch").join(format!("point_{i}"))
    }

    pub fn load_branch(&self) -> Result<Vec<BranchPoint64>, StageError> {
        let st = Stage::Branch;
        let text = self.read(st, "branch.jsonl")?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                let doc: Value = serde_json::from_str(line).map_err(|e| gate(st, format!("branch.jsonl line {}: {e}", i + 1)))?;
                let num = |key: &str| {
                    doc[key]
                        .as_f64()
                        .ok_or_else(|| gate(st, format!("branch.jsonl line {}: missing `{key}`", i + 1)))
                };
                let v = ModeSequence64::read_dir(self.grid.clone(), &self.branch_dir(i)).map_err(fail(st))?;
                Ok(BranchPoint {
                    alpha: num("alpha")?,
                    lambda: num("lambda")?,
                    v,
                    newton_iters: num("newton_iters")? as usize,
                    residual: num("residual")?,
                })
            })
            .collect()
    }

    /// Assembles the breathers and checks them.
    pub fn verify(&self, ctx: &Context64, branch: &[BranchPoint64]) -> Result<Value, StageError> {
        let st = Stage::Verify;
        let cfg = &self.cfg;
        let mut points = Vec::with_capacity(branch.len());
        let mut worst = 0.0f64;
        for (i, bp) in branch.iter().enumerate() {
            let field = assemble_breather(bp, &ctx.gs, cfg.omega, cfg.t_count, cfg.r_subsample).map_err(fail(st))?;
            self.write(st, &format!("breather_{i}.csv"), &field.to_csv())?;
            let (_, rep) = verify_point(bp, ctx, cfg.t_count).map_err(fail(st))?;
            let tail = tail_decay_report(&full_modes(bp, &ctx.gs).map_err(fail(st))?, TAIL_ORDER).map_err(fail(st))?;
            worst = worst.max(rep.pde_residual);
            points.push(json!({ "index": i, "report": rep, "tail_decay": tail }));
        }
        let excitation = mode_excitation_report(branch, ctx).ok();
        let doc = json!({
            "points": points,
            "excitation": excitation,
            "pde_tolerance": cfg.tolerances.pde,
        });
        self.write(st, "verification.json", &pretty(&doc))?;
        if worst > cfg.tolerances.pde {
            return Err(gate(st, format!("pde residual {worst:.3e} exceeds {:.1e}", cfg.tolerances.pde)));
        }
        if let Some(ex) = &excitation {
            if !ex.pass {
                return Err(gate(st, format!("mode excitation ratio {:.3e} below threshold", ex.ratio)));
            }
        }
        Ok(doc)
    }

    /// Runs one stage, reading the earlier stages' artifacts.
    pub fn run_stage(&self, stage: Stage) -> Result<(), StageError> {
        match stage {
            Stage::GroundState => self.ground_state().map(drop),
            Stage::Phases => self.phases(&self.load_ground_state()?).map(drop),
            Stage::Kernel => {
                let gs = self.load_ground_state()?;
                let plan = self.load_plan(&gs)?;
                self.kernel(gs, plan).map(drop)
            }
            Stage::Branch => self.branch(&self.load_context()?).map(drop),
            Stage::Verify => {
                let ctx = self.load_context()?;
                let branch = self.load_branch()?;
                self.verify(&ctx, &branch).map(drop)
            }
        }
    }

    /// Runs the stages in order, stopping after `last`.
    pub fn run(&self, last: Stage) -> Result<(), StageError> {
        self.write(Stage::GroundState, "config.json", &pretty(&json!(self.cfg)))?;
        self.ground_state()?;
        if last == Stage::GroundState {
            return Ok(());
        }
        // later stages see the ground state exactly as a standalone run would
        let gs = self.load_ground_state()?;
        let plan = self.phases(&gs)?;
        if last == Stage::Phases {
            return Ok(());
        }
        let ctx = self.kernel(gs, plan)?;
        if last == Stage::Kernel {
            return Ok(());
        }
        let branch = self.branch(&ctx)?;
        if last == Stage::Branch {
            return Ok(());
        }
        self.verify(&ctx, &branch).map(drop)
    }
}

/// Full pipeline for `cfg`.
pub fn run_pipeline(cfg: SolverConfig) -> Result<(), StageError> {
    Pipeline::new(cfg)?.run(Stage::Verify)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn parse(text: &str) -> Value {
    serde_json::from_str(text).expect("report is valid json")
}

/// Reads a coupling profile `r,value` at arbitrary increasing radii and
/// interpolates it linearly onto `grid`; the end values are held outside.
fn load_profile(path: &Path, grid: &Arc<RadialGrid<f64>>) -> Result<RadialFn64, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("gamma_profile {}: {e}", path.display()))?;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(r, v)| Some((r.trim().parse::<f64>().ok()?, v.trim().parse::<f64>().ok()?)));
        let (r, v) = parsed.ok_or_else(|| format!("gamma_profile line {}: expected `r,value`", i + 1))?;
        if samples.last().is_some_and(|&(p, _)| r <= p) {
            return Err(format!("gamma_profile line {}: radii must increase", i + 1));
        }
        samples.push((r, v));
    }
    if samples.is_empty() {
        return Err("gamma_profile: no samples".into());
    }
    let at = |r: f64| {
        let j = samples.partition_point(|&(x, _)| x <= r);
        match j {
            0 => samples[0].1,
            j if j == samples.len() => samples[j - 1].1,
            j => {
                let ((x0, y0), (x1, y1)) = (samples[j - 1], samples[j]);
                y0 + (y1 - y0) * (r - x0) / (x1 - x0)
            }
        }
    };
    Ok(RadialFn64::from_fn(grid.clone(), at))
}
