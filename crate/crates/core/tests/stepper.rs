use mchb::constitutive::L;
use mchb::diagnostics::{component_masses, energy_law_residual, free_energy};
use mchb::grid::Grid;
use mchb::model::{FlowBackend, Preset, ScenarioConfig};
use mchb::stepper::{ModelSpecs, State, Stepper};

fn small(preset: Preset, backend: FlowBackend) -> (ScenarioConfig, ModelSpecs, Stepper) {
    let mut cfg = preset.config();
    cfg.grid_nx = 24;
    cfg.grid_ny = 24;
    cfg.flow_backend = backend;
    let specs = ModelSpecs::from_config(&cfg);
    let stepper = Stepper::from_config(&cfg).unwrap();
    (cfg, specs, stepper)
}

fn advance(stepper: &Stepper, st: &State, dt: f64, n: usize) -> Vec<State> {
    let mut out = vec![st.clone()];
    for _ in 0..n {
        let (next, _) = stepper.step(out.last().unwrap(), dt).unwrap();
        out.push(next);
    }
    out
}

#[test]
fn uniform_state_without_sources_is_a_fixed_point() {
    let (cfg, specs, stepper) = small(Preset::ZeroSource, FlowBackend::Darcy);
    let g = Grid::new(cfg.grid_nx, cfg.grid_ny, cfg.domain_lx, cfg.domain_ly).unwrap();
    let phi = [vec![0.3; g.len()], vec![0.2; g.len()], vec![0.1; g.len()]];
    let st = State::from_fields(&g, &specs, phi, vec![0.7; g.len()]);
    let (next, _) = stepper.step(&st, cfg.time_step()).unwrap();
    for i in 0..L {
        assert!(next.phi[i].iter().zip(&st.phi[i]).all(|(a, b)| (a - b).abs() < 1e-12));
    }
    assert!(next.sigma.iter().all(|s| (s - 0.7).abs() < 1e-12));
    assert!(next.u.x.iter().chain(&next.u.y).all(|v| v.abs() < 1e-10));
}

#[test]
fn coupled_steps_conserve_phase_masses_without_sources() {
    let (cfg, specs, stepper) = small(Preset::ZeroSource, FlowBackend::Darcy);
    let st = State::initial(&cfg, &specs).unwrap();
    let states = advance(&stepper, &st, cfg.time_step(), 5);
    let (m0, _, _) = component_masses(&states[0]);
    let area = cfg.domain_lx * cfg.domain_ly;
    for s in &states[1..] {
        let (m, _, healthy) = component_masses(s);
        for i in 0..L {
            assert!((m[i] - m0[i]).abs() < 1e-13 * area);
        }
        assert!((m.iter().sum::<f64>() + healthy - area).abs() < 1e-14);
    }
}

#[test]
fn energy_never_increases_in_pure_cahn_hilliard_mode() {
    let (cfg, specs, stepper) = small(Preset::ZeroSource, FlowBackend::None);
    let st = State::initial(&cfg, &specs).unwrap();
    // A step ten times the default still decreases the energy.
    let states = advance(&stepper, &st, 10.0 * cfg.time_step(), 8);
    for w in states.windows(2) {
        assert!(free_energy(&w[1], &specs).0 <= free_energy(&w[0], &specs).0);
    }
}

#[test]
fn coupled_step_reports_nonpositive_balance_without_sources() {
    let (cfg, specs, stepper) = small(Preset::ZeroSource, FlowBackend::Darcy);
    let st = State::initial(&cfg, &specs).unwrap();
    let dt = cfg.time_step();
    let (next, rep) = stepper.step(&st, dt).unwrap();
    assert!(rep.newton_residual <= cfg.solver.newton_tol);
    let e = energy_law_residual(&st, &next, dt, &specs);
    assert!(e.source_work.abs() < 1e-12 && e.boundary_term == 0.0);
    assert!(e.signed_residual <= 1e-8 * e.dissipation.max(1.0));
}

#[test]
fn mirror_symmetric_data_stays_symmetric() {
    let (cfg, specs, stepper) = small(Preset::StratifiedTumor, FlowBackend::Darcy);
    let st = State::initial(&cfg, &specs).unwrap();
    let g = st.grid;
    let states = advance(&stepper, &st, cfg.time_step(), 3);
    let last = states.last().unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (k, m) = (g.idx(i, j), g.idx(g.nx - 1 - i, j));
            for f in last.phi.iter().chain([&last.sigma, &last.p]) {
                worst = worst.max((f[k] - f[m]).abs());
            }
            worst = worst.max((last.vx[k] + last.vx[m]).abs());
        }
    }
    assert!(worst < 1e-9, "asymmetry {worst:e}");
}

#[test]
fn brinkman_backend_takes_a_step() {
    let (mut cfg, _, _) = small(Preset::DarcyLimit, FlowBackend::Brinkman);
    cfg.grid_nx = 16;
    cfg.grid_ny = 16;
    let specs = ModelSpecs::from_config(&cfg);
    let stepper = Stepper::from_config(&cfg).unwrap();
    let st = State::initial(&cfg, &specs).unwrap();
    let (next, rep) = stepper.step(&st, cfg.time_step()).unwrap();
    assert!(next.is_finite());
    assert!(rep.div_residual < 1e-6);
    assert!(next.u.x.iter().any(|v| *v != 0.0));
}
