//! Darcy-limit study: Brinkman solves with shrinking viscosity against the
//! Darcy solve on identical inputs.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::flow::{darcy_residual, solve_brinkman, solve_darcy, FlowError, FlowOptions, FlowResult};
use crate::grid::{FaceField, Grid};
use crate::model::{FlowBackend, ScenarioConfig};
use crate::simulation::{run, RunError};
use crate::stepper::{flow_force, source_terms, ModelSpecs, State};

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub eta_levels: Vec<f64>,
    pub velocity_gaps: Vec<f64>,
    pub darcy_residuals: Vec<f64>,
    pub reference: FlowResult,
    /// First failing level and its error; later levels are dropped.
    pub failure: Option<(f64, String)>,
}

impl SweepResult {
    pub fn reference_norm(&self) -> f64 {
        self.reference.u.weighted_dot(&self.reference.u).sqrt()
    }

    pub fn relative_gaps(&self) -> Vec<f64> {
        let r = self.reference_norm();
        self.velocity_gaps.iter().map(|g| if r > 0.0 { g / r } else { *g }).collect()
    }
}

/// Runs `snapshot_steps` Darcy steps of the scenario and returns the state.
pub fn frozen_snapshot(cfg: &ScenarioConfig) -> Result<(ModelSpecs, State), RunError> {
    let mut c = cfg.clone();
    c.flow_backend = FlowBackend::Darcy;
    c.output.dir = None;
    c.t_end = c.time_step() * c.sweep.snapshot_steps as f64;
    let summary = run(&c)?;
    Ok((ModelSpecs::from_config(&c), summary.final_state))
}

/// Solves Brinkman with `eta = lambda = level` for each level, on at most
/// `jobs` threads, and compares with the Darcy solve.
pub fn darcy_limit_sweep(
    grid: &Grid,
    force: &FaceField,
    s_v: &[f64],
    nu: f64,
    levels: &[f64],
    jobs: usize,
    opts: &FlowOptions,
) -> Result<SweepResult, FlowError> {
    let reference = solve_darcy(grid, force, s_v, nu, opts)?;
    let slots: Mutex<Vec<Option<Result<(f64, f64), FlowError>>>> = Mutex::new(levels.iter().map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let n = grid.len();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, levels.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= levels.len() {
                    break;
                }
                let eta = vec![levels[i]; n];
                let out = solve_brinkman(grid, force, s_v, &eta, &eta, nu, opts).map(|b| {
                    let mut d = b.u.clone();
                    d.axpy(-1.0, &reference.u);
                    (d.weighted_dot(&d).sqrt(), darcy_residual(grid, &b.u, &b.p, force, nu))
                });
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    let mut result = SweepResult {
        eta_levels: Vec::new(),
        velocity_gaps: Vec::new(),
        darcy_residuals: Vec::new(),
        reference,
        failure: None,
    };
    for (lvl, slot) in levels.iter().zip(slots.into_inner().unwrap()) {
        match slot.expect("every level is visited") {
            Ok((gap, res)) => {
                result.eta_levels.push(*lvl);
                result.velocity_gaps.push(gap);
                result.darcy_residuals.push(res);
            }
            Err(e) => {
                result.failure = Some((*lvl, e.to_string()));
                break;
            }
        }
    }
    Ok(result)
}

/// Full study on the frozen snapshot of `cfg`.
pub fn sweep_from_config(cfg: &ScenarioConfig, jobs: usize) -> Result<SweepResult, RunError> {
    let (specs, st) = frozen_snapshot(cfg)?;
    let (_, _, s_v) = source_terms(&specs, &st);
    let opts = FlowOptions {
        tol: cfg.solver.flow_tol,
        max_iter: cfg.solver.flow_max_iter,
        inner_tol: cfg.solver.linear_tol,
    };
    darcy_limit_sweep(&st.grid, &flow_force(&st), &s_v, cfg.model.nu, &cfg.sweep.eta_levels, jobs, &opts)
        .map_err(|e| RunError::Setup(format!("Darcy reference solve failed: {e}")))
}

pub const SWEEP_HEADER: [&str; 4] = ["eta", "velocity_gap", "relative_gap", "darcy_residual"];

pub fn write_sweep_csv(path: &Path, r: &SweepResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_HEADER)?;
    for (i, rel) in r.relative_gaps().iter().enumerate() {
        w.write_record([
            format!("{:e}", r.eta_levels[i]),
            format!("{:e}", r.velocity_gaps[i]),
            format!("{rel:e}"),
            format!("{:e}", r.darcy_residuals[i]),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_force_gives_zero_gaps() {
        let g = Grid::new(12, 12, 1.0, 1.0).unwrap();
        let r = darcy_limit_sweep(
            &g,
            &FaceField::zeros(g),
            &vec![0.0; g.len()],
            1.0,
            &[1e-1, 1e-2],
            2,
            &FlowOptions::default(),
        )
        .unwrap();
        assert_eq!(r.velocity_gaps, vec![0.0, 0.0]);
        assert!(r.failure.is_none());
    }
}
