use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mchb::mms::run_mms;
use mchb::model::{load_config, ConfigError, Preset, ScenarioConfig};
use mchb::simulation::{run, RunError};
use mchb::sweep::{sweep_from_config, write_sweep_csv};

const OK: u8 = 0;
const CONFIG: u8 = 1;
const ABORTED: u8 = 2;
const VERIFICATION: u8 = 3;
const ASSUMPTION: u8 = 4;

#[derive(Parser)]
#[command(name = "mchb", version, about = "Multiphase Cahn-Hilliard tumour growth with Brinkman/Darcy flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a scenario and write energy.csv, run_meta.json and dumps.
    Run {
        #[command(flatten)]
        common: Common,
        /// Number of steps (sets t_end = steps * dt).
        #[arg(long, conflicts_with = "t_end")]
        steps: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Brinkman solves with shrinking viscosity against Darcy on a frozen snapshot.
    SweepDarcy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Manufactured-solution refinement studies.
    Mms {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Grid ladder, e.g. 32,64,128,256.
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
    },
    /// Check the structural assumptions of a configuration.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON document merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reject configurations that fail any assumption.
    #[arg(long)]
    strict: bool,
    /// Output directory; falls back to the config, then $MCHB_OUT_DIR/<command>.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn config_exit(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Assumption(_) => ASSUMPTION,
        _ => CONFIG,
    }
}

impl Common {
    fn resolve(&self, default: Preset) -> Result<ScenarioConfig, u8> {
        let preset = match &self.preset {
            Some(name) => Preset::from_name(name).ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                eprintln!("error: unknown preset '{name}' (expected one of {})", names.join(", "));
                CONFIG
            })?,
            None => default,
        };
        let mut cfg = load_config(self.config.as_deref(), Some(&preset.config()), self.strict).map_err(|e| {
            eprintln!("error: {e}");
            config_exit(&e)
        })?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ScenarioConfig, command: &str) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        if let Some(d) = &cfg.output.dir {
            return PathBuf::from(d);
        }
        let root = std::env::var_os("MCHB_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("mchb-out"));
        root.join(command)
    }
}

fn cmd_run(common: &Common, steps: Option<usize>, t_end: Option<f64>) -> u8 {
    let mut cfg = match common.resolve(Preset::StratifiedTumor) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = steps {
        cfg.t_end = n as f64 * cfg.time_step();
    }
    if let Some(t) = t_end {
        if !(t >= 0.0 && t.is_finite()) {
            eprintln!("error: --t-end must be non-negative");
            return CONFIG;
        }
        cfg.t_end = t;
    }
    let dir = common.out_dir(&cfg, "run");
    cfg.output.dir = Some(dir.to_string_lossy().into_owned());
    match run(&cfg) {
        Ok(s) => {
            let last = s.reports.last().expect("initial report");
            println!(
                "completed {} steps to t = {:e} (dt = {:e}, halvings {}); E = {:e}; output in {}",
                s.steps,
                s.t,
                s.dt,
                s.dt_halvings,
                last.energy,
                dir.display()
            );
            OK
        }
        Err(RunError::Aborted { t, steps, reason, .. }) => {
            eprintln!("error: run aborted at t = {t:e} after {steps} steps: {reason}");
            ABORTED
        }
        Err(RunError::Setup(m)) => {
            eprintln!("error: {m}");
            CONFIG
        }
        Err(e @ RunError::Io(_)) => {
            eprintln!("error: {e}");
            ABORTED
        }
    }
}

fn cmd_sweep(common: &Common, jobs: usize) -> u8 {
    let cfg = match common.resolve(Preset::StratifiedTumor) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = common.out_dir(&cfg, "sweep-darcy");
    let result = match sweep_from_config(&cfg, jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ABORTED;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| write_sweep_csv(&dir.join("sweep.csv"), &result)) {
        eprintln!("error: cannot write sweep output: {e}");
        return ABORTED;
    }
    println!("{:>10} {:>14} {:>14} {:>14}", "eta", "gap", "relative", "darcy_res");
    for (i, rel) in result.relative_gaps().iter().enumerate() {
        println!(
            "{:>10.1e} {:>14.6e} {:>14.6e} {:>14.6e}",
            result.eta_levels[i], result.velocity_gaps[i], rel, result.darcy_residuals[i]
        );
    }
    if let Some((eta, why)) = &result.failure {
        eprintln!("error: Brinkman solve failed at eta = {eta:e}: {why} (partial results written)");
        return ABORTED;
    }
    let decreasing = result.velocity_gaps.windows(2).all(|w| w[1] < w[0]);
    if !decreasing {
        eprintln!("verification failed: velocity gaps are not strictly decreasing");
        return VERIFICATION;
    }
    OK
}

fn write_mms_csv(path: &Path, rows: &[mchb::mms::Convergence], lx: f64) -> std::io::Result<()> {
    let mut out = String::from("study,n,h,error\n");
    for c in rows {
        for (n, e) in c.grids.iter().zip(&c.errors) {
            out.push_str(&format!("{},{},{:e},{:e}\n", c.study.name(), n, lx / *n as f64, e));
        }
    }
    std::fs::write(path, out)
}

fn cmd_mms(common: &Common, jobs: usize, grids: Option<Vec<usize>>) -> u8 {
    let mut cfg = match common.resolve(Preset::Mms) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(g) = grids {
        if g.iter().any(|n| *n < 8) {
            eprintln!("error: grids must be at least 8");
            return CONFIG;
        }
        cfg.mms.grids = g;
    }
    let rows = match run_mms(&cfg, jobs) {
        Ok(r) => r,
        Err(mchb::mms::MmsError::Ladder(n)) => {
            eprintln!("error: need at least two grids to fit a slope, got {n}");
            return CONFIG;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ABORTED;
        }
    };
    let dir = common.out_dir(&cfg, "mms");
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| write_mms_csv(&dir.join("mms.csv"), &rows, cfg.domain_lx)) {
        eprintln!("error: cannot write mms output: {e}");
        return ABORTED;
    }
    let mut code = OK;
    for c in &rows {
        println!("{:<20} slope {:.3}  errors {:?}", c.study.name(), c.slope, c.errors);
        if !(c.slope >= 1.8) {
            eprintln!("verification failed: {} slope {:.3} < 1.8", c.study.name(), c.slope);
            code = VERIFICATION;
        }
    }
    code
}

fn cmd_validate(common: &Common) -> u8 {
    // Validation reports assumption failures itself, so load leniently.
    let lenient = Common {
        strict: false,
        config: common.config.clone(),
        preset: common.preset.clone(),
        seed: common.seed,
        out_dir: None,
    };
    let cfg = match lenient.resolve(Preset::StratifiedTumor) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let rep = cfg.assumptions();
    for c in &rep.checks {
        println!("{} {} {}", c.id, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
    println!("coercivity {:e}", rep.coercivity);
    println!("coupling_bound {:e}", rep.coupling_bound);
    println!("epsilon {:e} (bound {:e})", cfg.model.epsilon, rep.epsilon_bound);
    println!("growth_constant {:e}", rep.growth_constant);
    println!("volume_bound {:e}", rep.volume_bound);
    if rep.all_passed() {
        return OK;
    }
    for f in rep.failures() {
        eprintln!("{}: {f}", if common.strict { "error" } else { "warning" });
    }
    if common.strict {
        ASSUMPTION
    } else {
        OK
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as configuration errors.
            return ExitCode::from(if e.use_stderr() { CONFIG } else { OK });
        }
    };
    let code = match &cli.command {
        Command::Run { common, steps, t_end } => cmd_run(common, *steps, *t_end),
        Command::SweepDarcy { common, jobs } => cmd_sweep(common, *jobs),
        Command::Mms { common, jobs, grids } => cmd_mms(common, *jobs, grids.clone()),
        Command::Validate { common } => cmd_validate(common),
    };
    ExitCode::from(code)
}
