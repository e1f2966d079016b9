//! Convex-split time stepping. Mobilities, sources, transported
//! coefficients and the concave part are frozen at the old level; phases,
//! nutrient and the velocity they drive are solved together by Newton-GMRES.

use std::cell::RefCell;

use crate::constitutive::{
    ChemicalEnergySpec, MobilitySpec, Phases, PotentialSpec, SourceSpec, ViscositySpec, L,
};
use crate::flow::{solve_brinkman, solve_darcy, FlowError, FlowOptions, FlowResult};
use crate::grid::{
    advective_divergence, face_divergence, face_gradient, for_each_boundary_face, laplacian_lattice,
    transport_dual_force, weighted_laplacian, BoundaryCondition, FaceField, Grid, TransportClosure,
};
use crate::initial::initial_fields;
use crate::linalg::{gmres, norm_inf};
use crate::model::{FlowBackend, ModelParameters, ScenarioConfig, SolverTolerances};
use crate::spectral::{Basis, Spectral};

const NEUMANN: BoundaryCondition = BoundaryCondition::NeumannZero;

/// Every constitutive ingredient of one model instance.
#[derive(Clone, Debug)]
pub struct ModelSpecs {
    pub params: ModelParameters,
    pub potential: PotentialSpec,
    pub chem: ChemicalEnergySpec,
    pub sources: SourceSpec,
    pub mobility: MobilitySpec,
    pub viscosity: Option<ViscositySpec>,
    pub backend: FlowBackend,
    pub sources_enabled: bool,
}

impl ModelSpecs {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            params: cfg.model.clone(),
            potential: cfg.potential,
            chem: ChemicalEnergySpec::from_params(&cfg.model),
            sources: SourceSpec::from_params(&cfg.model, cfg.source_variant),
            mobility: MobilitySpec::default(),
            viscosity: cfg.viscosity(),
            backend: cfg.flow_backend,
            sources_enabled: cfg.sources_enabled,
        }
    }

    /// Discrete Robin coefficient for a boundary face at normal spacing `h`.
    pub fn robin_coefficient(&self, h: f64) -> f64 {
        let k = self.params.robin_k;
        if k == 0.0 {
            return 0.0;
        }
        let d = self.mobility.nutrient_mobility() * self.params.chi_sigma;
        k / (1.0 + k * h / (2.0 * d))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub grid: Grid,
    pub t: f64,
    pub step: usize,
    pub phi: [Vec<f64>; L],
    pub mu: [Vec<f64>; L],
    pub sigma: Vec<f64>,
    pub n_sigma: Vec<f64>,
    /// Face velocity used during the step that produced this state.
    pub u: FaceField,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn phases_at(phi: &[Vec<f64>; L], k: usize) -> Phases {
    [phi[0][k], phi[1][k], phi[2][k]]
}

impl State {
    /// Builds a state from phases and nutrient, with potentials evaluated
    /// fully explicitly and zero velocity.
    pub fn from_fields(grid: &Grid, specs: &ModelSpecs, phi: [Vec<f64>; L], sigma: Vec<f64>) -> Self {
        let (mu, n_sigma) = chemical_potentials(grid, specs, &phi, &sigma);
        Self {
            grid: *grid,
            t: 0.0,
            step: 0,
            phi,
            mu,
            sigma,
            n_sigma,
            u: FaceField::zeros(*grid),
            vx: vec![0.0; grid.len()],
            vy: vec![0.0; grid.len()],
            p: vec![0.0; grid.len()],
        }
    }

    pub fn initial(cfg: &ScenarioConfig, specs: &ModelSpecs) -> Result<Self, crate::grid::DiscretizationError> {
        let grid = Grid::new(cfg.grid_nx, cfg.grid_ny, cfg.domain_lx, cfg.domain_ly)?;
        let (phi, sigma) = initial_fields(&grid, &cfg.initial, &cfg.model, cfg.seed);
        Ok(Self::from_fields(&grid, specs, phi, sigma))
    }

    pub fn is_finite(&self) -> bool {
        self.phi
            .iter()
            .chain(self.mu.iter())
            .chain([&self.sigma, &self.n_sigma, &self.vx, &self.vy, &self.p])
            .all(|f| f.iter().all(|v| v.is_finite()))
    }
}

/// `mu_i = -gamma eps Lap phi_i + gamma/eps Psi'(phi_i) + N_phi,i` and `N_sigma`.
pub fn chemical_potentials(
    grid: &Grid,
    specs: &ModelSpecs,
    phi: &[Vec<f64>; L],
    sigma: &[f64],
) -> ([Vec<f64>; L], Vec<f64>) {
    let m = &specs.params;
    let ge = m.gamma * m.epsilon;
    let gi = m.gamma / m.epsilon;
    let mu = std::array::from_fn(|i| {
        let lap = laplacian_lattice(grid, &phi[i], NEUMANN);
        (0..grid.len())
            .map(|k| {
                let p = phases_at(phi, k);
                let np = specs.chem.d_phi(&p, sigma[k]);
                -ge * lap[k] + gi * specs.potential.well(phi[i][k]).1 + np[i]
            })
            .collect()
    });
    let n_sigma = (0..grid.len())
        .map(|k| specs.chem.d_sigma(&phases_at(phi, k), sigma[k]))
        .collect();
    (mu, n_sigma)
}

/// Source terms at one state: phase sources, nutrient source, volume source.
pub fn source_terms(specs: &ModelSpecs, st: &State) -> ([Vec<f64>; L], Vec<f64>, Vec<f64>) {
    let n = st.grid.len();
    if !specs.sources_enabled {
        return (std::array::from_fn(|_| vec![0.0; n]), vec![0.0; n], vec![0.0; n]);
    }
    let mut sp: [Vec<f64>; L] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ss = vec![0.0; n];
    let mut sv = vec![0.0; n];
    for k in 0..n {
        let p = phases_at(&st.phi, k);
        let m = phases_at(&st.mu, k);
        let s = st.sigma[k];
        let v = specs.sources.source_phi(&p, s, &m);
        for i in 0..L {
            sp[i][k] = v[i];
        }
        ss[k] = specs.sources.source_nutrient(&p, s, &m);
        sv[k] = specs.sources.source_volume(&p, s, &m);
    }
    (sp, ss, sv)
}

/// Face mobility of phase `i`: average of the two adjacent cells.
pub fn face_mobility(specs: &ModelSpecs, st: &State, i: usize) -> FaceField {
    let g = st.grid;
    if specs.mobility.is_constant() {
        let c = specs.mobility.eval(i, &[0.0; L], 0.0);
        return FaceField {
            grid: g,
            x: vec![c; g.n_xfaces()],
            y: vec![c; g.n_yfaces()],
        };
    }
    let cell: Vec<f64> = (0..g.len())
        .map(|k| specs.mobility.eval(i, &phases_at(&st.phi, k), st.sigma[k]))
        .collect();
    FaceField::from_cells(g, &cell, &cell)
}

/// Face force driving the flow: the dual of the transport operators tested
/// with the chemical potentials.
pub fn flow_force(st: &State) -> FaceField {
    force_from(&st.grid, &st.phi, &st.mu, &st.sigma, &st.n_sigma)
}

/// Force for transported phases `phi` and nutrient `sigma` against the
/// potentials `mu` and `n_sigma`.
pub fn force_from(g: &Grid, phi: &[Vec<f64>; L], mu: &[Vec<f64>; L], sigma: &[f64], n_sigma: &[f64]) -> FaceField {
    let mut f = transport_dual_force(g, sigma, n_sigma, TransportClosure::FreeOutflow);
    for i in 0..L {
        f.axpy(1.0, &transport_dual_force(g, &phi[i], &mu[i], TransportClosure::Impermeable));
    }
    f
}

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error("coupled Newton iteration failed (residual {residual:e} after {iterations} iterations)")]
    Newton { iterations: usize, residual: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("non-finite values after step")]
    NonFinite,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub flow_iterations: usize,
    pub div_residual: f64,
    pub momentum_residual: f64,
    pub newton_iterations: usize,
    pub newton_residual: f64,
    pub krylov_iterations: usize,
}

/// Everything held at the old time level during one step.
struct Frozen<'a> {
    old: &'a State,
    dt: f64,
    explicit: [Vec<f64>; L],
    mob: [FaceField; L],
    s_phi: [Vec<f64>; L],
    s_sigma: Vec<f64>,
    s_v: Vec<f64>,
    robin: Vec<f64>,
    eta: Vec<f64>,
    lam: Vec<f64>,
}

struct Evaluation {
    r: Vec<f64>,
    mu: [Vec<f64>; L],
    n_sigma: Vec<f64>,
}

pub struct Stepper {
    pub specs: ModelSpecs,
    pub grid: Grid,
    pub tol: SolverTolerances,
    spectral: Spectral,
}

impl Stepper {
    pub fn new(specs: ModelSpecs, grid: Grid, tol: SolverTolerances) -> Self {
        let spectral = Spectral::new(&grid);
        Self {
            specs,
            grid,
            tol,
            spectral,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, crate::grid::DiscretizationError> {
        let grid = Grid::new(cfg.grid_nx, cfg.grid_ny, cfg.domain_lx, cfg.domain_ly)?;
        Ok(Self::new(ModelSpecs::from_config(cfg), grid, cfg.solver.clone()))
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            tol: self.tol.flow_tol,
            max_iter: self.tol.flow_max_iter,
            inner_tol: self.tol.linear_tol,
        }
    }

    /// Solves the flow problem for the forces of `st` with volume source `s_v`.
    pub fn solve_flow(&self, st: &State, s_v: &[f64]) -> Result<FlowResult, FlowError> {
        let visc = self.specs.viscosity.unwrap_or(ViscositySpec::constant(0.0, 0.0));
        let (eta, lam) = viscosity_fields(&visc, st);
        self.flow_for(&flow_force(st), s_v, &eta, &lam)
    }

    fn flow_for(&self, force: &FaceField, s_v: &[f64], eta: &[f64], lam: &[f64]) -> Result<FlowResult, FlowError> {
        let g = &self.grid;
        let nu = self.specs.params.nu;
        match self.specs.backend {
            FlowBackend::None => Ok(FlowResult::zero(g)),
            FlowBackend::Darcy => solve_darcy(g, force, s_v, nu, &self.flow_options()),
            FlowBackend::Brinkman => solve_brinkman(g, force, s_v, eta, lam, nu, &self.flow_options()),
        }
    }

    /// Face velocity for a force; the Darcy case is a direct sine solve.
    fn velocity(&self, fz: &Frozen, force: &FaceField, s_v: &[f64]) -> Result<FaceField, FlowError> {
        let g = self.grid;
        let nu = self.specs.params.nu;
        match self.specs.backend {
            FlowBackend::None => Ok(FaceField::zeros(g)),
            FlowBackend::Darcy => {
                let divf = face_divergence(&g, force);
                let rhs: Vec<f64> = s_v.iter().zip(&divf).map(|(s, d)| nu * s - d).collect();
                let p = self.spectral.solve_dirichlet_poisson(&rhs);
                let mut u = force.clone();
                u.axpy(-1.0, &face_gradient(&g, &p, BoundaryCondition::DirichletZero));
                for v in u.x.iter_mut().chain(u.y.iter_mut()) {
                    *v /= nu;
                }
                Ok(u)
            }
            FlowBackend::Brinkman => {
                solve_brinkman(&g, force, s_v, &fz.eta, &fz.lam, nu, &self.flow_options()).map(|r| r.u)
            }
        }
    }

    fn freeze<'a>(&self, st: &'a State, dt: f64) -> Frozen<'a> {
        let g = self.grid;
        let n = g.len();
        let m = &self.specs.params;
        let gi = m.gamma / m.epsilon;
        let (s_phi, s_sigma, s_v) = source_terms(&self.specs, st);
        let explicit = std::array::from_fn(|i| {
            (0..n)
                .map(|k| {
                    let np = self.specs.chem.d_phi(&phases_at(&st.phi, k), st.sigma[k]);
                    gi * self.specs.potential.concave_derivative(st.phi[i][k]) + np[i]
                })
                .collect()
        });
        let mut robin = vec![0.0; n];
        for_each_boundary_face(&g, |c, _edge, h| {
            robin[c] += self.specs.robin_coefficient(h) / h;
        });
        let (eta, lam) = match (self.specs.backend, self.specs.viscosity) {
            (FlowBackend::Brinkman, Some(v)) => viscosity_fields(&v, st),
            _ => (vec![0.0; n], vec![0.0; n]),
        };
        Frozen {
            old: st,
            dt,
            explicit,
            mob: std::array::from_fn(|i| face_mobility(&self.specs, st, i)),
            s_phi,
            s_sigma,
            s_v,
            robin,
            eta,
            lam,
        }
    }

    /// Residual of the coupled step for `x = [phi_1, phi_2, phi_3, sigma]`.
    fn evaluate(&self, fz: &Frozen, x: &[f64]) -> Result<Evaluation, FlowError> {
        let g = self.grid;
        let n = g.len();
        let m = &self.specs.params;
        let (ge, gi, dt) = (m.gamma * m.epsilon, m.gamma / m.epsilon, fz.dt);
        let chi = m.chi_sigma;
        let dn = self.specs.mobility.nutrient_mobility();
        let old = fz.old;
        let phi: [&[f64]; L] = std::array::from_fn(|i| &x[i * n..(i + 1) * n]);
        let sigma = &x[L * n..];
        let mu: [Vec<f64>; L] = std::array::from_fn(|i| {
            let lap = laplacian_lattice(&g, phi[i], NEUMANN);
            (0..n)
                .map(|k| -ge * lap[k] + gi * self.specs.potential.convex_well(phi[i][k]).0 + fz.explicit[i][k])
                .collect()
        });
        let b = self.specs.chem.b_mat;
        let n_sigma: Vec<f64> = (0..n)
            .map(|k| chi * sigma[k] - (0..L).map(|i| b[i] * phi[i][k]).sum::<f64>() - self.specs.chem.b)
            .collect();
        let moving = self.specs.backend != FlowBackend::None;
        let u = if moving {
            let f = force_from(&g, &old.phi, &mu, &old.sigma, &n_sigma);
            Some(self.velocity(fz, &f, &fz.s_v)?)
        } else {
            None
        };
        let mut r = vec![0.0; (L + 1) * n];
        for i in 0..L {
            let d = weighted_laplacian(&g, &mu[i], NEUMANN, &fz.mob[i]);
            let conv = match &u {
                Some(u) => advective_divergence(&g, &old.phi[i], u, &fz.s_v, TransportClosure::Impermeable),
                None => vec![0.0; n],
            };
            for k in 0..n {
                r[i * n + k] = phi[i][k] - old.phi[i][k] + dt * (conv[k] - d[k] - fz.s_phi[i][k]);
            }
        }
        let lap_n = laplacian_lattice(&g, &n_sigma, NEUMANN);
        let conv = match &u {
            Some(u) => advective_divergence(&g, &old.sigma, u, &fz.s_v, TransportClosure::FreeOutflow),
            None => vec![0.0; n],
        };
        let target = m.sigma_gamma;
        for k in 0..n {
            r[L * n + k] = sigma[k] - old.sigma[k]
                + dt * (conv[k] - dn * lap_n[k] - fz.robin[k] * (target - sigma[k]) + fz.s_sigma[k]);
        }
        Ok(Evaluation { r, mu, n_sigma })
    }

    /// Jacobian of `evaluate` at phase curvatures `curv`.
    fn jacobian(&self, fz: &Frozen, curv: &[Vec<f64>; L], x: &[f64], y: &mut [f64]) -> Result<(), FlowError> {
        let g = self.grid;
        let n = g.len();
        let m = &self.specs.params;
        let (ge, gi, dt) = (m.gamma * m.epsilon, m.gamma / m.epsilon, fz.dt);
        let chi = m.chi_sigma;
        let dn = self.specs.mobility.nutrient_mobility();
        let old = fz.old;
        let dmu: [Vec<f64>; L] = std::array::from_fn(|i| {
            let xi = &x[i * n..(i + 1) * n];
            let lap = laplacian_lattice(&g, xi, NEUMANN);
            (0..n).map(|k| -ge * lap[k] + gi * curv[i][k] * xi[k]).collect()
        });
        let b = self.specs.chem.b_mat;
        let ds = &x[L * n..];
        let dnut: Vec<f64> = (0..n)
            .map(|k| chi * ds[k] - (0..L).map(|i| b[i] * x[i * n + k]).sum::<f64>())
            .collect();
        let zero = vec![0.0; n];
        let du = if self.specs.backend != FlowBackend::None {
            let f = force_from(&g, &old.phi, &dmu, &old.sigma, &dnut);
            Some(self.velocity(fz, &f, &zero)?)
        } else {
            None
        };
        for i in 0..L {
            let d = weighted_laplacian(&g, &dmu[i], NEUMANN, &fz.mob[i]);
            let conv = match &du {
                Some(u) => advective_divergence(&g, &old.phi[i], u, &zero, TransportClosure::Impermeable),
                None => zero.clone(),
            };
            for k in 0..n {
                y[i * n + k] = x[i * n + k] + dt * (conv[k] - d[k]);
            }
        }
        let lap_n = laplacian_lattice(&g, &dnut, NEUMANN);
        let conv = match &du {
            Some(u) => advective_divergence(&g, &old.sigma, u, &zero, TransportClosure::FreeOutflow),
            None => zero,
        };
        for k in 0..n {
            y[L * n + k] = ds[k] + dt * (conv[k] - dn * lap_n[k] + fz.robin[k] * ds[k]);
        }
        Ok(())
    }

    /// Block lower-triangular preconditioner built from cosine symbols. The
    /// flow enters as the extra mobility `q^2 / nu` of each transported field.
    fn precondition(&self, fz: &Frozen, sbar: &[f64; L], r: &[f64], z: &mut [f64]) {
        let g = self.grid;
        let n = g.len();
        let m = &self.specs.params;
        let (ge, gi, dt) = (m.gamma * m.epsilon, m.gamma / m.epsilon, fz.dt);
        let chi = m.chi_sigma;
        let dn = self.specs.mobility.nutrient_mobility();
        let moving = self.specs.backend != FlowBackend::None;
        let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
        let flow_mob = |q: &[f64]| if moving { mean(&q.iter().map(|v| v * v).collect::<Vec<_>>()) / m.nu } else { 0.0 };
        for i in 0..L {
            let mob = &fz.mob[i];
            let mbar = (mob.x.iter().chain(mob.y.iter()).sum::<f64>()) / (mob.x.len() + mob.y.len()) as f64
                + flow_mob(&fz.old.phi[i]);
            let zi = self.spectral.apply_symbol(Basis::Cosine, &r[i * n..(i + 1) * n], |l| {
                1.0 / (1.0 + dt * mbar * l * (ge * l + gi * sbar[i]))
            });
            z[i * n..(i + 1) * n].copy_from_slice(&zi);
        }
        let b = self.specs.chem.b_mat;
        let bz: Vec<f64> = (0..n).map(|k| (0..L).map(|i| b[i] * z[i * n + k]).sum()).collect();
        let lap_b = laplacian_lattice(&g, &bz, NEUMANN);
        let rs: Vec<f64> = (0..n).map(|k| r[L * n + k] - dt * dn * lap_b[k]).collect();
        let ms = chi * (dn + flow_mob(&fz.old.sigma));
        let rbar = mean(&fz.robin);
        let zs = self.spectral.apply_symbol(Basis::Cosine, &rs, |l| 1.0 / (1.0 + dt * (ms * l + rbar)));
        z[L * n..].copy_from_slice(&zs);
    }

    /// One step. Phases and nutrient are advanced together with the velocity
    /// evaluated at the new potentials, so transport and force cancel in the
    /// energy balance.
    pub fn step(&self, st: &State, dt: f64) -> Result<(State, StepReport), StepError> {
        let g = self.grid;
        let n = g.len();
        let fz = self.freeze(st, dt);
        let pot = &self.specs.potential;
        let mut x: Vec<f64> = st.phi.iter().flatten().chain(st.sigma.iter()).copied().collect();
        let mut ev = self.evaluate(&fz, &x)?;
        let mut rn = norm_inf(&ev.r);
        let tol = self.tol.newton_tol;
        let mut report = StepReport { dt, ..Default::default() };
        while rn > tol {
            if report.newton_iterations >= self.tol.newton_max_iter {
                return Err(StepError::Newton {
                    iterations: report.newton_iterations,
                    residual: rn,
                });
            }
            report.newton_iterations += 1;
            let curv: [Vec<f64>; L] =
                std::array::from_fn(|i| x[i * n..(i + 1) * n].iter().map(|&v| pot.convex_well(v).1).collect());
            let sbar: [f64; L] = std::array::from_fn(|i| curv[i].iter().sum::<f64>() / n as f64);
            let failure = RefCell::new(None);
            let rhs: Vec<f64> = ev.r.iter().map(|v| -v).collect();
            let mut delta = vec![0.0; x.len()];
            let forcing = (1e-3 * rn.min(1.0)).max(self.tol.linear_tol);
            let stats = gmres(
                |a, y| {
                    if let Err(e) = self.jacobian(&fz, &curv, a, y) {
                        failure.borrow_mut().get_or_insert(e);
                    }
                },
                |a, y| self.precondition(&fz, &sbar, a, y),
                &rhs,
                &mut delta,
                forcing,
                0.0,
                50,
                2000,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e.into());
            }
            report.krylov_iterations += stats.iterations;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                let et = self.evaluate(&fz, &trial)?;
                let rtn = norm_inf(&et.r);
                if rtn.is_finite() && (rtn < rn || rtn <= tol) {
                    x = trial;
                    ev = et;
                    rn = rtn;
                    break;
                }
                t *= 0.5;
                if t < 1e-4 {
                    // Round-off floor: accept if close, otherwise give up.
                    if rn <= 1e3 * tol {
                        break;
                    }
                    return Err(StepError::Newton {
                        iterations: report.newton_iterations,
                        residual: rn,
                    });
                }
            }
            if t < 1e-4 {
                break;
            }
        }
        report.newton_residual = rn;

        let phi: [Vec<f64>; L] = std::array::from_fn(|i| x[i * n..(i + 1) * n].to_vec());
        let sigma = x[L * n..].to_vec();
        let flow = if self.specs.backend == FlowBackend::None {
            FlowResult::zero(&g)
        } else {
            let f = force_from(&g, &st.phi, &ev.mu, &st.sigma, &ev.n_sigma);
            self.flow_for(&f, &fz.s_v, &fz.eta, &fz.lam)?
        };
        report.flow_iterations = flow.iterations;
        report.div_residual = flow.div_residual;
        report.momentum_residual = flow.momentum_residual;
        let next = State {
            grid: g,
            t: st.t + dt,
            step: st.step + 1,
            phi,
            mu: ev.mu,
            sigma,
            n_sigma: ev.n_sigma,
            u: flow.u,
            vx: flow.vx,
            vy: flow.vy,
            p: flow.p,
        };
        if !next.is_finite() {
            return Err(StepError::NonFinite);
        }
        Ok((next, report))
    }
}

/// Cell viscosities frozen at the given state.
pub fn viscosity_fields(visc: &ViscositySpec, st: &State) -> (Vec<f64>, Vec<f64>) {
    let n = st.grid.len();
    let eta = (0..n).map(|k| visc.eta(&phases_at(&st.phi, k))).collect();
    let lam = (0..n).map(|k| visc.lambda(&phases_at(&st.phi, k))).collect();
    (eta, lam)
}
