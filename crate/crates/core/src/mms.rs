//! Manufactured-solution refinement studies for the Darcy solve, the
//! Cahn-Hilliard chemical potential and the nutrient operator.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::constitutive::L;
use crate::flow::{solve_darcy, FlowOptions};
use crate::grid::{laplacian_lattice, l2_norm, BoundaryCondition, FaceField, Grid};
use crate::linalg::pcg;
use crate::model::ScenarioConfig;
use crate::spectral::{Basis, Spectral};
use crate::stepper::ModelSpecs;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    DarcyPressure,
    DarcyVelocity,
    ChemicalPotential,
    Nutrient,
}

impl Study {
    pub const ALL: [Study; 4] = [
        Study::DarcyPressure,
        Study::DarcyVelocity,
        Study::ChemicalPotential,
        Study::Nutrient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::DarcyPressure => "darcy-pressure",
            Study::DarcyVelocity => "darcy-velocity",
            Study::ChemicalPotential => "chemical-potential",
            Study::Nutrient => "nutrient",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Convergence {
    pub study: Study,
    pub grids: Vec<usize>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MmsError {
    #[error("need at least two grids to fit a slope, got {0}")]
    Ladder(usize),
    #[error("{study} solve failed on {n}x{n}: {reason}")]
    Solve { study: &'static str, n: usize, reason: String },
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn sample_faces(g: &Grid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> FaceField {
    let mut out = FaceField::zeros(*g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            out.x[g.xf(i, j)] = fx(i as f64 * g.hx, (j as f64 + 0.5) * g.hy);
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            out.y[g.yf(i, j)] = fy((i as f64 + 0.5) * g.hx, j as f64 * g.hy);
        }
    }
    out
}

/// `p = sin(pi x/lx) sin(pi y/ly)`, `v = (sin(pi y/ly) x^2, cos(pi x/lx) y)`,
/// force `grad p + nu v`, source `div v`. Returns pressure and cell velocity errors.
fn darcy_errors(g: &Grid, nu: f64) -> Result<(f64, f64), String> {
    let (a, b) = (PI / g.lx, PI / g.ly);
    let vx = |x: f64, y: f64| (b * y).sin() * x * x;
    let vy = |x: f64, y: f64| (a * x).cos() * y;
    let force = sample_faces(
        g,
        |x, y| a * (a * x).cos() * (b * y).sin() + nu * vx(x, y),
        |x, y| b * (a * x).sin() * (b * y).cos() + nu * vy(x, y),
    );
    let s_v = g.sample(|x, y| 2.0 * x * (b * y).sin() + (a * x).cos());
    let opts = FlowOptions {
        tol: 1e-13,
        ..FlowOptions::default()
    };
    let r = solve_darcy(g, &force, &s_v, nu, &opts).map_err(|e| e.to_string())?;
    let p_exact = g.sample(|x, y| (a * x).sin() * (b * y).sin());
    let dp: Vec<f64> = r.p.iter().zip(&p_exact).map(|(u, v)| u - v).collect();
    // Face values are exact here (the pressure is a discrete eigenfunction),
    // so compare the cell-centred velocity.
    let ex: Vec<f64> = r.vx.iter().zip(g.sample(vx)).map(|(u, v)| u - v).collect();
    let ey: Vec<f64> = r.vy.iter().zip(g.sample(vy)).map(|(u, v)| u - v).collect();
    Ok((l2_norm(g, &dp), l2_norm(g, &ex).hypot(l2_norm(g, &ey))))
}

/// Applies `-gamma eps Lap phi_i + gamma/eps Psi_i(phi)` to cosine data and
/// compares with the analytic potential.
fn chemical_potential_error(g: &Grid, specs: &ModelSpecs) -> f64 {
    let m = &specs.params;
    let (ge, gi) = (m.gamma * m.epsilon, m.gamma / m.epsilon);
    let (a, b) = (PI / g.lx, PI / g.ly);
    let mean = [0.3, 0.25, 0.2];
    let amp = [0.2, -0.15, 0.1];
    let kk = [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)];
    let phi: [Vec<f64>; L] = std::array::from_fn(|i| {
        g.sample(|x, y| mean[i] + amp[i] * (kk[i].0 * a * x).cos() * (kk[i].1 * b * y).cos())
    });
    let mut err2 = 0.0;
    for i in 0..L {
        let lap = laplacian_lattice(g, &phi[i], BoundaryCondition::NeumannZero);
        let k2 = (kk[i].0 * a).powi(2) + (kk[i].1 * b).powi(2);
        let d: Vec<f64> = (0..g.len())
            .map(|k| {
                let w = specs.potential.well(phi[i][k]).1;
                let exact = ge * k2 * (phi[i][k] - mean[i]) + gi * w;
                -ge * lap[k] + gi * w - exact
            })
            .collect();
        err2 += l2_norm(g, &d).powi(2);
    }
    err2.sqrt()
}

/// Solves `sigma - chi D Lap sigma = f` with the Robin wall law
/// `chi D dn sigma = K (g - sigma)`, `g` chosen so that
/// `sigma = 1 + x^2 y / 2 + cos(pi x/lx) sin(pi y/ly) / 4` is exact.
fn nutrient_error(g: &Grid, specs: &ModelSpecs, sp: &Spectral) -> Result<f64, String> {
    let chi = specs.params.chi_sigma;
    let dn = specs.mobility.nutrient_mobility();
    let c = chi * dn;
    let k = specs.params.robin_k.max(1.0);
    let (a, b) = (PI / g.lx, PI / g.ly);
    let s = |x: f64, y: f64| 1.0 + 0.5 * x * x * y + 0.25 * (a * x).cos() * (b * y).sin();
    let sx = |x: f64, y: f64| x * y - 0.25 * a * (a * x).sin() * (b * y).sin();
    let sy = |x: f64, y: f64| 0.5 * x * x + 0.25 * b * (a * x).cos() * (b * y).cos();
    let lap = |x: f64, y: f64| y - 0.25 * (a * a + b * b) * (a * x).cos() * (b * y).sin();
    let mut rhs = g.sample(|x, y| s(x, y) - c * lap(x, y));
    let mut robin = vec![0.0; g.len()];
    let kx = k / (1.0 + k * g.hx / (2.0 * c));
    let ky = k / (1.0 + k * g.hy / (2.0 * c));
    // Wall data g = sigma + (chi D / K) dn sigma at each face midpoint.
    for j in 0..g.ny {
        let y = (j as f64 + 0.5) * g.hy;
        for (i, x, sign) in [(0, 0.0, -1.0), (g.nx - 1, g.lx, 1.0)] {
            let cell = g.idx(i, j);
            robin[cell] += kx / g.hx;
            rhs[cell] += kx / g.hx * (s(x, y) + c / k * sign * sx(x, y));
        }
    }
    for i in 0..g.nx {
        let x = (i as f64 + 0.5) * g.hx;
        for (j, y, sign) in [(0, 0.0, -1.0), (g.ny - 1, g.ly, 1.0)] {
            let cell = g.idx(i, j);
            robin[cell] += ky / g.hy;
            rhs[cell] += ky / g.hy * (s(x, y) + c / k * sign * sy(x, y));
        }
    }
    let mut sol = vec![0.0; g.len()];
    let st = pcg(
        |x, y| {
            let l = laplacian_lattice(g, x, BoundaryCondition::NeumannZero);
            for q in 0..y.len() {
                y[q] = x[q] - c * l[q] + robin[q] * x[q];
            }
        },
        |r, z| z.copy_from_slice(&sp.apply_symbol(Basis::Cosine, r, |l| 1.0 / (1.0 + c * l))),
        &rhs,
        &mut sol,
        1e-13,
        0.0,
        5000,
    );
    if !st.converged {
        return Err(format!("residual {:e}", st.residual));
    }
    let exact = g.sample(s);
    let d: Vec<f64> = sol.iter().zip(&exact).map(|(u, v)| u - v).collect();
    Ok(l2_norm(g, &d))
}

/// Runs all studies over `cfg.mms.grids` (square grids on the configured
/// domain), with ladder entries spread over at most `jobs` threads.
pub fn run_mms(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<Convergence>, MmsError> {
    let grids = &cfg.mms.grids;
    if grids.len() < 2 {
        return Err(MmsError::Ladder(grids.len()));
    }
    let specs = ModelSpecs::from_config(cfg);
    let rows: Mutex<Vec<Option<Result<[f64; 4], MmsError>>>> = Mutex::new(grids.iter().map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, grids.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grids.len() {
                    break;
                }
                let n = grids[i];
                let out = (|| {
                    let g = Grid::new(n, n, cfg.domain_lx, cfg.domain_ly).map_err(|e| MmsError::Solve {
                        study: "grid",
                        n,
                        reason: e.to_string(),
                    })?;
                    let (ep, ev) = darcy_errors(&g, cfg.model.nu).map_err(|reason| MmsError::Solve {
                        study: "darcy",
                        n,
                        reason,
                    })?;
                    let ec = chemical_potential_error(&g, &specs);
                    let sp = Spectral::new(&g);
                    let en = nutrient_error(&g, &specs, &sp).map_err(|reason| MmsError::Solve {
                        study: "nutrient",
                        n,
                        reason,
                    })?;
                    Ok([ep, ev, ec, en])
                })();
                rows.lock().unwrap()[i] = Some(out);
            });
        }
    });
    let mut table = Vec::new();
    for r in rows.into_inner().unwrap() {
        table.push(r.expect("every grid is visited")?);
    }
    let h: Vec<f64> = grids.iter().map(|n| cfg.domain_lx / *n as f64).collect();
    Ok(Study::ALL
        .iter()
        .enumerate()
        .map(|(s, study)| {
            let errors: Vec<f64> = table.iter().map(|row| row[s]).collect();
            Convergence {
                study: *study,
                grids: grids.clone(),
                slope: fit_slope(&h, &errors),
                errors,
            }
        })
        .collect())
}
