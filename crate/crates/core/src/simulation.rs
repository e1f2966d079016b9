//! Time loop with output and step-size recovery.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{energy_law_residual, initial_report, EnergyReport};
use crate::model::ScenarioConfig;
use crate::output::{write_state_dump, CsvReport};
use crate::stepper::{State, StepReport, Stepper};

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub dt: f64,
    pub dt_halvings: usize,
    pub reports: Vec<EnergyReport>,
    pub step_reports: Vec<StepReport>,
    pub final_state: State,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("output failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("run aborted at t = {t} after {steps} steps: {reason}")]
    Aborted {
        t: f64,
        steps: usize,
        reason: String,
        partial: Box<RunSummary>,
    },
}

#[derive(Serialize)]
struct RunMeta<'a> {
    seed: u64,
    dt: f64,
    n_steps: usize,
    config: &'a ScenarioConfig,
}

struct Sink {
    dir: PathBuf,
    csv: CsvReport,
    seed: u64,
}

impl Sink {
    fn open(dir: &Path, cfg: &ScenarioConfig) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir.join("dumps"))?;
        let meta = RunMeta {
            seed: cfg.seed,
            dt: cfg.time_step(),
            n_steps: cfg.n_steps(),
            config: cfg,
        };
        std::fs::write(
            dir.join("run_meta.json"),
            serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?,
        )?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: CsvReport::create(&dir.join("energy.csv"))?,
            seed: cfg.seed,
        })
    }

    fn dump(&self, st: &State) -> std::io::Result<()> {
        let path = self.dir.join("dumps").join(format!("state_{:06}.bin", st.step));
        write_state_dump(&path, st, self.seed)
    }
}

/// Runs the configured scenario to `t_end`. After a failed step the step
/// size is halved, at most `max_dt_halvings` times, before the run aborts.
pub fn run(cfg: &ScenarioConfig) -> Result<RunSummary, RunError> {
    let stepper = Stepper::from_config(cfg).map_err(|e| RunError::Setup(e.to_string()))?;
    let mut state =
        State::initial(cfg, &stepper.specs).map_err(|e| RunError::Setup(e.to_string()))?;
    let mut sink = match &cfg.output.dir {
        Some(d) => Some(Sink::open(Path::new(d), cfg)?),
        None => None,
    };
    let mut reports = vec![initial_report(&state, &stepper.specs)];
    if let Some(s) = sink.as_mut() {
        s.csv.push(&reports[0])?;
        s.dump(&state)?;
    }
    let mut dt = cfg.time_step();
    let n_target = cfg.n_steps();
    let t_end = cfg.t_end;
    let mut halvings = 0;
    let mut step_reports = Vec::new();
    let mut steps = 0;
    loop {
        let more = if halvings == 0 {
            steps < n_target
        } else {
            t_end - state.t > 1e-9 * dt
        };
        if !more {
            break;
        }
        let h = if halvings > 0 { dt.min(t_end - state.t) } else { dt };
        match stepper.step(&state, h) {
            Ok((next, info)) => {
                let mut rep = energy_law_residual(&state, &next, h, &stepper.specs);
                rep.div_residual = info.div_residual;
                rep.picard_iters = info.newton_iterations;
                state = next;
                steps += 1;
                if let Some(s) = sink.as_mut() {
                    if steps % cfg.output.csv_every == 0 {
                        s.csv.push(&rep)?;
                    }
                    if cfg.output.dump_every > 0 && steps % cfg.output.dump_every == 0 {
                        s.dump(&state)?;
                    }
                }
                reports.push(rep);
                step_reports.push(info);
            }
            Err(e) => {
                if halvings >= cfg.solver.max_dt_halvings {
                    let partial = RunSummary {
                        steps,
                        t: state.t,
                        dt,
                        dt_halvings: halvings,
                        reports,
                        step_reports,
                        final_state: state.clone(),
                    };
                    if let Some(s) = sink {
                        s.csv.finish()?;
                    }
                    return Err(RunError::Aborted {
                        t: state.t,
                        steps,
                        reason: e.to_string(),
                        partial: Box::new(partial),
                    });
                }
                halvings += 1;
                dt *= 0.5;
            }
        }
    }
    if let Some(s) = sink {
        if steps > 0 && (cfg.output.dump_every == 0 || steps % cfg.output.dump_every != 0) {
            s.dump(&state)?;
        }
        s.csv.finish()?;
    }
    Ok(RunSummary {
        steps,
        t: state.t,
        dt,
        dt_halvings: halvings,
        reports,
        step_reports,
        final_state: state,
    })
}
