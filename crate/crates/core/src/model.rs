//! Model parameters, assumption checks and scenario configuration.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constitutive::{
    ChemicalEnergySpec, MobilitySpec, PotentialSpec, SourceSpec, SourceVariant, ViscositySpec, L,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParameters {
    pub gamma: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub chi_sigma: f64,
    pub chi_phi: f64,
    pub p_rate: f64,
    pub q_rate: f64,
    pub a_rate: f64,
    pub d_rate: f64,
    pub c_rate: f64,
    pub b_rate: f64,
    pub kappa: f64,
    pub c_p: f64,
    pub c_n: f64,
    pub c_q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub robin_k: f64,
    pub sigma_gamma: f64,
    pub sigma_omega: f64,
    pub n_phases: usize,
    pub n_nutrients: usize,
    pub dim: usize,
}

impl Default for ModelParameters {
    fn default() -> Self {
        let mut m = Self {
            gamma: 1.0,
            epsilon: 0.0,
            nu: 1.0,
            chi_sigma: 1.0,
            chi_phi: 2.0,
            p_rate: 1.0,
            q_rate: 1.0,
            a_rate: 1.0,
            d_rate: 1.0,
            c_rate: 1.0,
            b_rate: 1.0,
            kappa: 0.5,
            c_p: 2.0,
            c_n: 0.3,
            c_q: 0.7,
            alpha: 1.0,
            beta: 1.0,
            r: 1.0,
            robin_k: 1.0,
            sigma_gamma: 1.0,
            sigma_omega: 1.0,
            n_phases: L,
            n_nutrients: 1,
            dim: 2,
        };
        m.epsilon = 0.8 * m.epsilon_bound(&PotentialSpec::default());
        m
    }
}

fn default_coercivity() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| PotentialSpec::default().coercivity())
}

/// Coercivity constant, cached for the default potential.
pub fn coercivity_of(potential: &PotentialSpec) -> f64 {
    if *potential == PotentialSpec::default() {
        default_coercivity()
    } else {
        potential.coercivity()
    }
}

impl ModelParameters {
    /// Upper bound on the interface width: `gamma chi_sigma A / (8 C^2)`.
    pub fn epsilon_bound(&self, potential: &PotentialSpec) -> f64 {
        let a = coercivity_of(potential);
        let c = ChemicalEnergySpec::from_params(self).coupling_bound();
        self.gamma * self.chi_sigma * a / (8.0 * c * c)
    }

    /// Range and ordering violations, empty when the parameters are admissible.
    pub fn ordering_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        let fields = [
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("nu", self.nu),
            ("chi_sigma", self.chi_sigma),
            ("chi_phi", self.chi_phi),
            ("p_rate", self.p_rate),
            ("q_rate", self.q_rate),
            ("a_rate", self.a_rate),
            ("d_rate", self.d_rate),
            ("c_rate", self.c_rate),
            ("b_rate", self.b_rate),
            ("kappa", self.kappa),
            ("c_p", self.c_p),
            ("c_n", self.c_n),
            ("c_q", self.c_q),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("r", self.r),
            ("robin_k", self.robin_k),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_omega", self.sigma_omega),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                e.push(format!("{name} must be finite"));
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("nu", self.nu),
            ("chi_sigma", self.chi_sigma),
            ("p_rate", self.p_rate),
            ("q_rate", self.q_rate),
            ("a_rate", self.a_rate),
            ("d_rate", self.d_rate),
            ("c_rate", self.c_rate),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("r", self.r),
        ] {
            if v.is_finite() && v <= 0.0 {
                e.push(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("chi_phi", self.chi_phi),
            ("b_rate", self.b_rate),
            ("robin_k", self.robin_k),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_omega", self.sigma_omega),
        ] {
            if v < 0.0 {
                e.push(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            e.push(format!("kappa must lie in [0, 1], got {}", self.kappa));
        }
        if self.c_p <= 1.0 {
            e.push(format!("c_p must exceed 1, got {}", self.c_p));
        }
        if !(0.0 < self.c_n && self.c_n < self.c_q) {
            e.push(format!(
                "thresholds must satisfy 0 < c_n < c_q, got c_n = {}, c_q = {}",
                self.c_n, self.c_q
            ));
        }
        if self.n_phases != L {
            e.push(format!("n_phases must be {L}, got {}", self.n_phases));
        }
        if self.n_nutrients != 1 {
            e.push(format!("n_nutrients must be 1, got {}", self.n_nutrients));
        }
        if self.dim != 2 {
            e.push(format!("dim must be 2, got {}", self.dim));
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub parameter_errors: Vec<String>,
    pub checks: Vec<AssumptionCheck>,
    pub coercivity: f64,
    pub coupling_bound: f64,
    pub epsilon_bound: f64,
    pub growth_constant: f64,
    pub volume_bound: f64,
}

impl AssumptionReport {
    pub fn passed(&self, id: &str) -> bool {
        self.checks.iter().any(|c| c.id == id && c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.parameter_errors.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = self.parameter_errors.clone();
        out.extend(
            self.checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("{}: {}", c.id, c.detail)),
        );
        out
    }
}

/// Checks the structural assumptions A1 to A8. `viscosity` is `None` for the
/// Darcy model, in which case A3 does not apply.
pub fn validate_assumptions(
    model: &ModelParameters,
    potential: &PotentialSpec,
    viscosity: Option<&ViscositySpec>,
    variant: SourceVariant,
) -> AssumptionReport {
    let parameter_errors = model.ordering_errors();
    if !parameter_errors.is_empty() {
        let checks = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8"]
            .iter()
            .map(|id| AssumptionCheck {
                id,
                passed: false,
                detail: "skipped: parameter ordering failed".into(),
            })
            .collect();
        return AssumptionReport {
            parameter_errors,
            checks,
            coercivity: f64::NAN,
            coupling_bound: f64::NAN,
            epsilon_bound: f64::NAN,
            growth_constant: f64::NAN,
            volume_bound: f64::NAN,
        };
    }
    let chem = ChemicalEnergySpec::from_params(model);
    let src = SourceSpec::from_params(model, variant);
    let mob = MobilitySpec::default();
    let a_psi = coercivity_of(potential);
    let c_g = chem.coupling_bound();
    let eps_bound = model.epsilon_bound(potential);
    let b_s = src.growth_constant();
    let a_s = src.volume_bound();
    let mut checks = Vec::new();
    let mut push = |id, passed, detail: String| checks.push(AssumptionCheck { id, passed, detail });

    push(
        "A1",
        model.gamma > 0.0 && model.epsilon > 0.0 && model.nu > 0.0 && model.dim == 2,
        "bounded Lipschitz domain, positive gamma, epsilon, nu; a rectangle is used".into(),
    );
    push(
        "A2",
        mob.floor > 0.0 && mob.constant >= mob.floor,
        format!("mobility bounded below by {}", mob.floor),
    );
    match viscosity {
        None => push("A3", true, "Darcy model: not applicable".into()),
        Some(v) => {
            let (lo, hi) = v.bounds();
            let ok = lo > 0.0 && hi.is_finite() && v.lambda0 >= 0.0;
            push(
                "A3",
                ok,
                format!("eta in [{lo}, {hi}], lambda = {}", v.lambda0),
            );
        }
    }
    push(
        "A4",
        model.chi_sigma > 0.0 && c_g.is_finite(),
        format!("chi_sigma = {}, coupling bound = {c_g}", model.chi_sigma),
    );
    push(
        "A5",
        b_s.is_finite() && b_s > 0.0,
        format!("linear growth of the sources with constant {b_s}"),
    );
    push(
        "A6",
        a_s.is_finite(),
        format!("volume source bounded by {a_s}"),
    );
    let convex_ok = potential.split_shift + potential.min_curvature() >= 0.0;
    let growth_ok = potential.max_curvature().is_some();
    let a7 = a_psi > 0.0 && convex_ok && growth_ok;
    let detail = if !growth_ok {
        "potential weights vanish, so quadratic growth and a bounded Hessian are required; \
         the pure quartic well grows too fast"
            .to_string()
    } else if !convex_ok {
        format!(
            "convex split needs shift >= {}, got {}",
            -potential.min_curvature(),
            potential.split_shift
        )
    } else {
        format!(
            "coercivity {a_psi}, Hessian bounded by {}",
            potential.max_curvature().unwrap_or(f64::INFINITY)
        )
    };
    push("A7", a7, detail);
    push(
        "A8",
        model.epsilon < eps_bound,
        format!("epsilon = {} against bound {eps_bound}", model.epsilon),
    );
    AssumptionReport {
        parameter_errors,
        checks,
        coercivity: a_psi,
        coupling_bound: c_g,
        epsilon_bound: eps_bound,
        growth_constant: b_s,
        volume_bound: a_s,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowBackend {
    Darcy,
    Brinkman,
    /// Velocity switched off: pure Cahn-Hilliard with nutrient diffusion.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Concentric shells: necrotic core, quiescent ring, proliferating rim.
    /// `center` is given in domain fractions, radii and width in length units.
    StratifiedTumor {
        center: [f64; 2],
        radii: [f64; 3],
        width: f64,
        sigma: f64,
    },
    /// Smooth random cosine modes around `mean`.
    RandomSmooth {
        mean: [f64; 3],
        amplitude: f64,
        modes: usize,
        sigma_mean: f64,
        sigma_amplitude: f64,
    },
    Uniform {
        phi: [f64; 3],
        sigma: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub csv_every: usize,
    pub dump_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            csv_every: 1,
            dump_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverTolerances {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
    pub flow_tol: f64,
    pub flow_max_iter: usize,
    pub max_dt_halvings: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            linear_tol: 1e-12,
            flow_tol: 1e-10,
            flow_max_iter: 500,
            max_dt_halvings: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub eta_levels: Vec<f64>,
    pub snapshot_steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eta_levels: vec![1e-1, 1e-2, 1e-3, 1e-4],
            snapshot_steps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsConfig {
    pub grids: Vec<usize>,
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self {
            grids: vec![32, 64, 128, 256],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelParameters,
    pub potential: PotentialSpec,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub domain_lx: f64,
    pub domain_ly: f64,
    /// Defaults to `0.1 epsilon^2 / gamma` when absent.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub flow_backend: FlowBackend,
    pub eta0: f64,
    pub lambda0: f64,
    pub viscosity_contrast: f64,
    pub source_variant: SourceVariant,
    pub sources_enabled: bool,
    pub initial: InitialCondition,
    pub seed: u64,
    pub output: OutputConfig,
    pub solver: SolverTolerances,
    pub sweep: SweepConfig,
    pub mms: MmsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Preset::StratifiedTumor.config()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    StratifiedTumor,
    ZeroSource,
    DarcyLimit,
    Mms,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::StratifiedTumor,
        Preset::ZeroSource,
        Preset::DarcyLimit,
        Preset::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::StratifiedTumor => "stratified-tumor",
            Preset::ZeroSource => "zero-source",
            Preset::DarcyLimit => "darcy-limit",
            Preset::Mms => "mms",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn config(self) -> ScenarioConfig {
        let model = ModelParameters::default();
        let eps = model.epsilon;
        let base = ScenarioConfig {
            model,
            potential: PotentialSpec::default(),
            grid_nx: 64,
            grid_ny: 64,
            domain_lx: 0.25,
            domain_ly: 0.25,
            dt: None,
            t_end: 0.0,
            flow_backend: FlowBackend::Darcy,
            eta0: 0.0,
            lambda0: 0.0,
            viscosity_contrast: 0.0,
            source_variant: SourceVariant::Linear,
            sources_enabled: true,
            initial: InitialCondition::StratifiedTumor {
                center: [0.5, 0.5],
                radii: [0.03, 0.06, 0.09],
                width: 2.0 * eps,
                sigma: 1.0,
            },
            seed: 0,
            output: OutputConfig::default(),
            solver: SolverTolerances::default(),
            sweep: SweepConfig::default(),
            mms: MmsConfig::default(),
        };
        let dt = 0.1 * eps * eps / base.model.gamma;
        match self {
            Preset::StratifiedTumor => ScenarioConfig {
                t_end: 100.0 * dt,
                ..base
            },
            Preset::ZeroSource => {
                let mut c = ScenarioConfig {
                    t_end: 200.0 * dt,
                    sources_enabled: false,
                    initial: InitialCondition::RandomSmooth {
                        mean: [0.3, 0.25, 0.2],
                        amplitude: 0.15,
                        modes: 4,
                        sigma_mean: 0.8,
                        sigma_amplitude: 0.1,
                    },
                    ..base
                };
                c.model.robin_k = 0.0;
                c
            }
            Preset::DarcyLimit => ScenarioConfig {
                flow_backend: FlowBackend::Brinkman,
                eta0: 1.0,
                t_end: 20.0 * dt,
                ..base
            },
            Preset::Mms => ScenarioConfig {
                domain_lx: 1.0,
                domain_ly: 1.0,
                t_end: 0.0,
                ..base
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("assumption check failed: {0}")]
    Assumption(String),
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

impl ScenarioConfig {
    pub fn viscosity(&self) -> Option<ViscositySpec> {
        match self.flow_backend {
            FlowBackend::Brinkman => Some(ViscositySpec {
                eta0: self.eta0,
                lambda0: self.lambda0,
                contrast: self.viscosity_contrast,
            }),
            _ => None,
        }
    }

    pub fn time_step(&self) -> f64 {
        self.dt
            .unwrap_or(0.1 * self.model.epsilon * self.model.epsilon / self.model.gamma)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.time_step() - 1e-9).ceil().max(0.0) as usize
    }

    pub fn assumptions(&self) -> AssumptionReport {
        validate_assumptions(
            &self.model,
            &self.potential,
            self.viscosity().as_ref(),
            self.source_variant,
        )
    }

    /// Structural checks independent of the analytic assumptions.
    pub fn check(&self) -> Result<(), ConfigError> {
        let errs = self.model.ordering_errors();
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs.join("; ")));
        }
        if self.grid_nx < 8 || self.grid_ny < 8 {
            return Err(ConfigError::Invalid(format!(
                "grid must be at least 8x8, got {}x{}",
                self.grid_nx, self.grid_ny
            )));
        }
        if !(self.domain_lx > 0.0 && self.domain_ly > 0.0)
            || !self.domain_lx.is_finite()
            || !self.domain_ly.is_finite()
        {
            return Err(ConfigError::Invalid("domain lengths must be positive".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(ConfigError::Invalid(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(ConfigError::Invalid("t_end must be non-negative".into()));
        }
        if self.flow_backend == FlowBackend::Brinkman && !(self.eta0 > 0.0) {
            return Err(ConfigError::Invalid("brinkman backend needs eta0 > 0".into()));
        }
        if self.lambda0 < 0.0 || self.viscosity_contrast < 0.0 {
            return Err(ConfigError::Invalid(
                "lambda0 and viscosity_contrast must be non-negative".into(),
            ));
        }
        if self.potential.split_shift < 0.0 || self.potential.offset < 0.0 {
            return Err(ConfigError::Invalid("potential constants must be non-negative".into()));
        }
        match &self.initial {
            InitialCondition::StratifiedTumor { radii, width, .. } => {
                if !(0.0 < radii[0] && radii[0] < radii[1] && radii[1] < radii[2]) || *width <= 0.0 {
                    return Err(ConfigError::Invalid(
                        "stratified radii must increase and width must be positive".into(),
                    ));
                }
            }
            InitialCondition::RandomSmooth { modes, .. } => {
                if *modes == 0 {
                    return Err(ConfigError::Invalid("random modes must be positive".into()));
                }
            }
            InitialCondition::Uniform { .. } => {}
        }
        if self.output.csv_every == 0 {
            return Err(ConfigError::Invalid("csv_every must be positive".into()));
        }
        for &n in &self.mms.grids {
            if n < 8 {
                return Err(ConfigError::Invalid("mms grids must be at least 8".into()));
            }
        }
        Ok(())
    }

    /// Applies a JSON document on top of `base`. Keys absent from the
    /// document keep their base values; when the document does not pin the
    /// interface width it is re-derived from the resulting parameters.
    pub fn from_json_over(base: &ScenarioConfig, doc: &str) -> Result<ScenarioConfig, ConfigError> {
        let patch: Value = if doc.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(doc)?
        };
        if !patch.is_object() {
            return Err(ConfigError::Invalid("config must be a JSON object".into()));
        }
        let pins_eps = patch
            .get("model")
            .and_then(|m| m.get("epsilon"))
            .is_some();
        let touches_model = patch.get("model").is_some() || patch.get("potential").is_some();
        let mut merged = serde_json::to_value(base)?;
        merge(&mut merged, patch);
        let mut cfg: ScenarioConfig = serde_json::from_value(merged)?;
        if touches_model && !pins_eps && cfg.model.ordering_errors().is_empty() {
            let b = cfg.model.epsilon_bound(&cfg.potential);
            cfg.model.epsilon = 0.8 * b;
        }
        Ok(cfg)
    }
}

/// Reads a config file over the stratified-tumor defaults (or `base`),
/// validates it, and in strict mode rejects any failed assumption.
pub fn load_config(
    path: Option<&Path>,
    base: Option<&ScenarioConfig>,
    strict: bool,
) -> Result<ScenarioConfig, ConfigError> {
    let default = ScenarioConfig::default();
    let base = base.unwrap_or(&default);
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            ScenarioConfig::from_json_over(base, &text)?
        }
        None => base.clone(),
    };
    cfg.check()?;
    if strict {
        let rep = cfg.assumptions();
        if !rep.all_passed() {
            return Err(ConfigError::Assumption(rep.failures().join("; ")));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_epsilon_is_inside_bound() {
        let m = ModelParameters::default();
        let b = m.epsilon_bound(&PotentialSpec::default());
        assert!((m.epsilon / b - 0.8).abs() < 1e-12);
        assert!(b > 0.0);
    }

    #[test]
    fn kappa_out_of_range_is_ordering_failure() {
        let m = ModelParameters {
            kappa: 1.5,
            ..Default::default()
        };
        let rep = validate_assumptions(&m, &PotentialSpec::default(), None, SourceVariant::Linear);
        assert!(!rep.parameter_errors.is_empty());
        assert!(rep.parameter_errors[0].contains("kappa"));
        assert!(!rep.all_passed());
    }

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ScenarioConfig::from_json_over(&ScenarioConfig::default(), "{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let r = ScenarioConfig::from_json_over(&ScenarioConfig::default(), r#"{"grid_nz": 4}"#);
        assert!(matches!(r, Err(ConfigError::Parse(_))));
    }

    #[test]
    fn epsilon_rederived_from_gamma() {
        let cfg = ScenarioConfig::from_json_over(
            &ScenarioConfig::default(),
            r#"{"model": {"gamma": 2.0}}"#,
        )
        .unwrap();
        let b = cfg.model.epsilon_bound(&cfg.potential);
        assert!((cfg.model.epsilon - 0.8 * b).abs() < 1e-15);
        assert!((cfg.model.epsilon - 2.0 * ModelParameters::default().epsilon).abs() < 1e-12);
    }

    #[test]
    fn zero_dt_rejected() {
        let cfg =
            ScenarioConfig::from_json_over(&ScenarioConfig::default(), r#"{"dt": 0.0}"#).unwrap();
        assert!(cfg.check().is_err());
    }

    #[test]
    fn presets_are_valid() {
        for p in Preset::ALL {
            let c = p.config();
            c.check().unwrap();
            assert!(c.assumptions().all_passed(), "{}", p.name());
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
    }
}
