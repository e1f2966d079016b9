//! Free energy, dissipation, source work and the discrete energy balance.

use crate::constitutive::{ViscositySpec, L};
use crate::flow::flow_dissipation;
use crate::grid::{face_gradient, for_each_boundary_face, inner_product, integral, BoundaryCondition, FaceField};
use crate::stepper::{face_mobility, phases_at, source_terms, viscosity_fields, ModelSpecs, State};

const NEUMANN: BoundaryCondition = BoundaryCondition::NeumannZero;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub ginzburg_landau: f64,
    pub chemical: f64,
    pub dissipation: f64,
    pub boundary_term: f64,
    pub source_work: f64,
    /// `dE/dt + dissipation + boundary_term - source_work`; positive values
    /// mean spurious energy production.
    pub signed_residual: f64,
    pub identity_residual: f64,
    pub mass_phi: [f64; L],
    pub mass_healthy: f64,
    pub mass_sigma: f64,
    pub div_residual: f64,
    pub picard_iters: usize,
}

fn interior_sq(g: &FaceField, weight: Option<&FaceField>) -> f64 {
    // Boundary faces carry zero Neumann gradients, so only interior faces
    // contribute; all interior faces have weight hx * hy.
    let gr = g.grid;
    let a = gr.cell_area();
    let mut s = 0.0;
    for j in 0..gr.ny {
        for i in 1..gr.nx {
            let k = gr.xf(i, j);
            s += g.x[k] * g.x[k] * weight.map_or(1.0, |w| w.x[k]);
        }
    }
    for j in 1..gr.ny {
        for i in 0..gr.nx {
            let k = gr.yf(i, j);
            s += g.y[k] * g.y[k] * weight.map_or(1.0, |w| w.y[k]);
        }
    }
    s * a
}

/// Returns `(E, Ginzburg-Landau part, chemical part)`.
pub fn free_energy(st: &State, specs: &ModelSpecs) -> (f64, f64, f64) {
    let g = &st.grid;
    let m = &specs.params;
    let ge = m.gamma * m.epsilon;
    let gi = m.gamma / m.epsilon;
    let mut bulk = 0.0;
    let mut chem = 0.0;
    for k in 0..g.len() {
        let p = phases_at(&st.phi, k);
        bulk += gi * specs.potential.psi(&p);
        chem += specs.chem.density(&p, st.sigma[k]);
    }
    bulk *= g.cell_area();
    chem *= g.cell_area();
    let grad: f64 = (0..L)
        .map(|i| interior_sq(&face_gradient(g, &st.phi[i], NEUMANN), None))
        .sum();
    let gl = bulk + 0.5 * ge * grad;
    (gl + chem, gl, chem)
}

/// Chemical dissipation with the mobility frozen at `frozen`, plus the flow
/// dissipation of the stored face velocity.
pub fn dissipation_with(st: &State, frozen: &State, specs: &ModelSpecs) -> f64 {
    let g = &st.grid;
    let mut d = 0.0;
    for i in 0..L {
        let mob = face_mobility(specs, frozen, i);
        d += interior_sq(&face_gradient(g, &st.mu[i], NEUMANN), Some(&mob));
    }
    d += specs.mobility.nutrient_mobility() * interior_sq(&face_gradient(g, &st.n_sigma, NEUMANN), None);
    d + flow_part(st, frozen, specs)
}

fn flow_part(st: &State, frozen: &State, specs: &ModelSpecs) -> f64 {
    let g = &st.grid;
    let nu = specs.params.nu;
    let visc = specs.viscosity.unwrap_or(ViscositySpec::constant(0.0, 0.0));
    let (eta, lam) = viscosity_fields(&visc, frozen);
    if st.u.x.iter().chain(st.u.y.iter()).all(|v| *v == 0.0) {
        return 0.0;
    }
    flow_dissipation(g, &st.u, &eta, &lam, nu)
}

pub fn dissipation_rate(st: &State, specs: &ModelSpecs) -> f64 {
    dissipation_with(st, st, specs)
}

/// Robin boundary dissipation `sum K chi sigma^2` over the wall.
pub fn boundary_term(st: &State, specs: &ModelSpecs) -> f64 {
    let chi = specs.params.chi_sigma;
    let mut s = 0.0;
    for_each_boundary_face(&st.grid, |c, edge, h| {
        s += specs.robin_coefficient(h) * chi * st.sigma[c] * st.sigma[c] * edge;
    });
    s
}

/// Work of sources, the Robin supply and the volume source against pressure.
pub fn source_work(before: &State, after: &State, specs: &ModelSpecs) -> f64 {
    let g = &after.grid;
    let (s_phi, s_sigma, s_v) = source_terms(specs, before);
    let mut w = 0.0;
    for i in 0..L {
        w += inner_product(g, &s_phi[i], &after.mu[i]);
    }
    w -= inner_product(g, &s_sigma, &after.n_sigma);
    w += inner_product(g, &after.p, &s_v);
    let target = specs.params.sigma_gamma;
    let chi = specs.params.chi_sigma;
    for_each_boundary_face(g, |c, edge, h| {
        let coupling = chi * after.sigma[c] - after.n_sigma[c];
        w += specs.robin_coefficient(h) * (target * after.n_sigma[c] + after.sigma[c] * coupling) * edge;
    });
    w
}

/// Returns `(phase masses, nutrient mass, healthy mass)`.
pub fn component_masses(st: &State) -> ([f64; L], f64, f64) {
    let g = &st.grid;
    let phi = std::array::from_fn(|i| integral(g, &st.phi[i]));
    let healthy: Vec<f64> = (0..g.len())
        .map(|k| 1.0 - st.phi.iter().map(|p| p[k]).sum::<f64>())
        .collect();
    (phi, integral(g, &st.sigma), integral(g, &healthy))
}

/// Report for a state with no preceding step.
pub fn initial_report(st: &State, specs: &ModelSpecs) -> EnergyReport {
    let (e, gl, ch) = free_energy(st, specs);
    let (mp, ms, mh) = component_masses(st);
    EnergyReport {
        t: st.t,
        dt: 0.0,
        energy: e,
        ginzburg_landau: gl,
        chemical: ch,
        dissipation: dissipation_rate(st, specs),
        boundary_term: boundary_term(st, specs),
        mass_phi: mp,
        mass_sigma: ms,
        mass_healthy: mh,
        ..Default::default()
    }
}

/// Discrete energy balance between two consecutive states.
pub fn energy_law_residual(before: &State, after: &State, dt: f64, specs: &ModelSpecs) -> EnergyReport {
    let (e0, _, _) = free_energy(before, specs);
    let (e1, gl, ch) = free_energy(after, specs);
    let diss = dissipation_with(after, before, specs);
    let bt = boundary_term(after, specs);
    let sw = source_work(before, after, specs);
    let signed = (e1 - e0) / dt + diss + bt - sw;
    let (mp, ms, mh) = component_masses(after);
    EnergyReport {
        t: after.t,
        dt,
        energy: e1,
        ginzburg_landau: gl,
        chemical: ch,
        dissipation: diss,
        boundary_term: bt,
        source_work: sw,
        signed_residual: signed,
        identity_residual: signed.abs(),
        mass_phi: mp,
        mass_healthy: mh,
        mass_sigma: ms,
        div_residual: 0.0,
        picard_iters: 0,
    }
}
