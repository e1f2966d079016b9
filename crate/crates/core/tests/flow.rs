use std::f64::consts::PI;

use mchb::flow::{darcy_residual, flow_dissipation, solve_brinkman, solve_darcy, FlowOptions};
use mchb::grid::{face_divergence, FaceField, Grid};

fn opts() -> FlowOptions {
    FlowOptions {
        tol: 1e-12,
        ..FlowOptions::default()
    }
}

fn smooth_force(g: &Grid, kx: f64, ky: f64) -> FaceField {
    let (a, b) = (PI / g.lx, PI / g.ly);
    let mut f = FaceField::zeros(*g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let (x, y) = (i as f64 * g.hx, (j as f64 + 0.5) * g.hy);
            f.x[g.xf(i, j)] = (kx * a * x).sin() * (ky * b * y).cos() + 0.3 * y;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let (x, y) = ((i as f64 + 0.5) * g.hx, j as f64 * g.hy);
            f.y[g.yf(i, j)] = (ky * b * y).sin() * (kx * a * x).cos() - 0.2 * x * x;
        }
    }
    f
}

#[test]
fn darcy_velocity_has_prescribed_divergence() {
    let g = Grid::new(24, 20, 1.0, 0.8).unwrap();
    let f = smooth_force(&g, 1.0, 2.0);
    let s_v = g.sample(|x, y| (PI * x).cos() * y);
    let r = solve_darcy(&g, &f, &s_v, 1.0, &opts()).unwrap();
    let div = face_divergence(&g, &r.u);
    let worst = div.iter().zip(&s_v).map(|(d, s)| (d - s).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "divergence defect {worst:e}");
    assert!(darcy_residual(&g, &r.u, &r.p, &f, 1.0) < 1e-12);
}

#[test]
fn darcy_solve_is_linear() {
    let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
    let (f1, f2) = (smooth_force(&g, 1.0, 1.0), smooth_force(&g, 2.0, 3.0));
    let s1 = g.sample(|x, _| x - 0.5);
    let s2 = g.sample(|_, y| (PI * y).sin());
    let mut f = f1.clone();
    f.axpy(-2.5, &f2);
    let s: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a - 2.5 * b).collect();
    let u1 = solve_darcy(&g, &f1, &s1, 2.0, &opts()).unwrap().u;
    let u2 = solve_darcy(&g, &f2, &s2, 2.0, &opts()).unwrap().u;
    let mut u = solve_darcy(&g, &f, &s, 2.0, &opts()).unwrap().u;
    u.axpy(-1.0, &u1);
    u.axpy(2.5, &u2);
    assert!(u.weighted_dot(&u).sqrt() < 1e-10);
}

#[test]
fn solenoidal_brinkman_flow_balances_work_and_dissipation() {
    let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
    let f = smooth_force(&g, 1.0, 2.0);
    let zero = vec![0.0; g.len()];
    let eta = g.sample(|x, y| 0.5 + 0.2 * x * y);
    let lam = vec![0.1; g.len()];
    let r = solve_brinkman(&g, &f, &zero, &eta, &lam, 1.0, &opts()).unwrap();
    let work = f.weighted_dot(&r.u);
    let diss = flow_dissipation(&g, &r.u, &eta, &lam, 1.0);
    assert!(work > 0.0);
    assert!((work - diss).abs() < 1e-8 * work, "work {work:e} dissipation {diss:e}");
}

#[test]
fn small_viscosity_brinkman_approaches_darcy_on_smooth_data() {
    let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
    let f = smooth_force(&g, 1.0, 1.0);
    let s_v = g.sample(|x, y| 0.2 * (PI * x).cos() * (PI * y).cos());
    let d = solve_darcy(&g, &f, &s_v, 1.0, &opts()).unwrap();
    let eta = vec![1e-6; g.len()];
    let b = solve_brinkman(&g, &f, &s_v, &eta, &eta, 1.0, &opts()).unwrap();
    let mut gap = b.u.clone();
    gap.axpy(-1.0, &d.u);
    let rel = (gap.weighted_dot(&gap) / d.u.weighted_dot(&d.u)).sqrt();
    assert!(rel < 1e-3, "relative gap {rel:e}");
}

#[test]
fn mirrored_force_gives_mirrored_darcy_flow() {
    let g = Grid::new(12, 12, 1.0, 1.0).unwrap();
    let f = smooth_force(&g, 1.0, 2.0);
    let mut m = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            m.x[g.xf(i, j)] = -f.x[g.xf(g.nx - i, j)];
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            m.y[g.yf(i, j)] = f.y[g.yf(g.nx - 1 - i, j)];
        }
    }
    let zero = vec![0.0; g.len()];
    let a = solve_darcy(&g, &f, &zero, 1.0, &opts()).unwrap();
    let b = solve_darcy(&g, &m, &zero, 1.0, &opts()).unwrap();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (k, km) = (g.idx(i, j), g.idx(g.nx - 1 - i, j));
            assert!((a.p[k] - b.p[km]).abs() < 1e-10);
        }
    }
}
