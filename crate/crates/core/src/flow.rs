//! Brinkman and Darcy solvers on a staggered (MAC) layout.
//!
//! Velocities live on faces, pressure in cells. The discrete system is the
//! saddle point of
//! `1/2 u.A u - <W F, u> - <p, D u - s>` where `A` collects the viscous
//! energy and the friction `nu W`. Boundary nodes are left out of the shear
//! energy, so the traction-free condition holds naturally. In the Darcy limit
//! the pressure satisfies the five-point Laplacian with `p = 0` on the wall.

use crate::grid::{face_divergence, face_gradient, l2_norm, BoundaryCondition, FaceField, Grid};
use crate::linalg::{dot, pcg};
use crate::spectral::Spectral;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            inner_tol: 1e-12,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FlowError {
    #[error("flow solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("flow solver stagnated after {iterations} iterations (residual {residual:e})")]
    Stagnated { iterations: usize, residual: f64 },
    #[error("inner velocity solve failed (residual {0:e})")]
    Inner(f64),
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    /// Face velocities.
    pub u: FaceField,
    /// Cell-centred velocity components.
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub p: Vec<f64>,
    pub div_residual: f64,
    pub momentum_residual: f64,
    pub iterations: usize,
}

impl FlowResult {
    pub fn zero(grid: &Grid) -> Self {
        Self {
            u: FaceField::zeros(*grid),
            vx: vec![0.0; grid.len()],
            vy: vec![0.0; grid.len()],
            p: vec![0.0; grid.len()],
            div_residual: 0.0,
            momentum_residual: 0.0,
            iterations: 0,
        }
    }
}

fn pack(u: &FaceField) -> Vec<f64> {
    let mut v = u.x.clone();
    v.extend_from_slice(&u.y);
    v
}

fn unpack(grid: &Grid, v: &[f64]) -> FaceField {
    let nx = grid.n_xfaces();
    FaceField {
        grid: *grid,
        x: v[..nx].to_vec(),
        y: v[nx..].to_vec(),
    }
}

/// Viscous energy plus friction on face velocities.
pub struct MomentumOperator {
    grid: Grid,
    eta: Vec<f64>,
    lambda: Vec<f64>,
    eta_node: Vec<f64>,
    nu: f64,
    w: Vec<f64>,
}

impl MomentumOperator {
    pub fn new(grid: &Grid, eta: &[f64], lambda: &[f64], nu: f64) -> Self {
        let g = *grid;
        let mut eta_node = vec![0.0; (g.nx + 1) * (g.ny + 1)];
        for j in 1..g.ny {
            for i in 1..g.nx {
                eta_node[j * (g.nx + 1) + i] = 0.25
                    * (eta[g.idx(i - 1, j - 1)]
                        + eta[g.idx(i, j - 1)]
                        + eta[g.idx(i - 1, j)]
                        + eta[g.idx(i, j)]);
            }
        }
        Self {
            grid: g,
            eta: eta.to_vec(),
            lambda: lambda.to_vec(),
            eta_node,
            nu,
            w: pack(&FaceField::weights(grid)),
        }
    }

    fn stresses(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let nxf = g.n_xfaces();
        let (ux, uy) = u.split_at(nxf);
        let mut txx = vec![0.0; g.len()];
        let mut tyy = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.idx(i, j);
                let exx = (ux[g.xf(i + 1, j)] - ux[g.xf(i, j)]) / g.hx;
                let eyy = (uy[g.yf(i, j + 1)] - uy[g.yf(i, j)]) / g.hy;
                let div = exx + eyy;
                txx[c] = 2.0 * self.eta[c] * exx + self.lambda[c] * div;
                tyy[c] = 2.0 * self.eta[c] * eyy + self.lambda[c] * div;
            }
        }
        let mut txy = vec![0.0; (g.nx + 1) * (g.ny + 1)];
        for j in 1..g.ny {
            for i in 1..g.nx {
                let n = j * (g.nx + 1) + i;
                let shear = (ux[g.xf(i, j)] - ux[g.xf(i, j - 1)]) / g.hy
                    + (uy[g.yf(i, j)] - uy[g.yf(i - 1, j)]) / g.hx;
                txy[n] = self.eta_node[n] * shear;
            }
        }
        (txx, tyy, txy)
    }

    /// `out = A u` with the viscous part only when `friction` is false.
    fn apply_inner(&self, u: &[f64], out: &mut [f64], friction: bool) {
        let g = self.grid;
        let a = g.cell_area();
        let nxf = g.n_xfaces();
        let (txx, tyy, txy) = self.stresses(u);
        let node = |i: usize, j: usize| txy[j * (g.nx + 1) + i];
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let right = if i < g.nx { txx[g.idx(i, j)] } else { 0.0 };
                let left = if i > 0 { txx[g.idx(i - 1, j)] } else { 0.0 };
                out[g.xf(i, j)] =
                    -a * ((right - left) / g.hx + (node(i, j + 1) - node(i, j)) / g.hy);
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let top = if j < g.ny { tyy[g.idx(i, j)] } else { 0.0 };
                let bot = if j > 0 { tyy[g.idx(i, j - 1)] } else { 0.0 };
                out[nxf + g.yf(i, j)] =
                    -a * ((top - bot) / g.hy + (node(i + 1, j) - node(i, j)) / g.hx);
            }
        }
        if friction {
            for k in 0..out.len() {
                out[k] += self.nu * self.w[k] * u[k];
            }
        }
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.apply_inner(u, out, true);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let a = g.cell_area();
        let nxf = g.n_xfaces();
        let mut d = vec![0.0; nxf + g.n_yfaces()];
        let node = |i: usize, j: usize| self.eta_node[j * (g.nx + 1) + i];
        let c2 = |c: usize| 2.0 * self.eta[c] + self.lambda[c];
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let mut s = 0.0;
                if i > 0 {
                    s += c2(g.idx(i - 1, j));
                }
                if i < g.nx {
                    s += c2(g.idx(i, j));
                }
                let k = g.xf(i, j);
                d[k] = a * (s / (g.hx * g.hx) + (node(i, j) + node(i, j + 1)) / (g.hy * g.hy))
                    + self.nu * self.w[k];
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let mut s = 0.0;
                if j > 0 {
                    s += c2(g.idx(i, j - 1));
                }
                if j < g.ny {
                    s += c2(g.idx(i, j));
                }
                let k = nxf + g.yf(i, j);
                d[k] = a * (s / (g.hy * g.hy) + (node(i, j) + node(i + 1, j)) / (g.hx * g.hx))
                    + self.nu * self.w[k];
            }
        }
        d
    }

    /// Viscous energy `sum 2 eta |D u|^2 + lambda (div u)^2` without friction.
    pub fn viscous_energy(&self, u: &FaceField) -> f64 {
        let v = pack(u);
        let mut out = vec![0.0; v.len()];
        self.apply_inner(&v, &mut out, false);
        dot(&v, &out)
    }
}

/// Discrete dissipation `<A u, u>` of a face velocity.
pub fn flow_dissipation(grid: &Grid, u: &FaceField, eta: &[f64], lambda: &[f64], nu: f64) -> f64 {
    let op = MomentumOperator::new(grid, eta, lambda, nu);
    op.viscous_energy(u) + nu * u.weighted_dot(u)
}

/// `-D^T p` scaled by the cell area: the pressure load on faces.
fn pressure_load(grid: &Grid, p: &[f64], out: &mut [f64]) {
    let g = *grid;
    let a = g.cell_area();
    let nxf = g.n_xfaces();
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let l = if i > 0 { p[g.idx(i - 1, j)] } else { 0.0 };
            let r = if i < g.nx { p[g.idx(i, j)] } else { 0.0 };
            out[g.xf(i, j)] = a * (l - r) / g.hx;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let b = if j > 0 { p[g.idx(i, j - 1)] } else { 0.0 };
            let t = if j < g.ny { p[g.idx(i, j)] } else { 0.0 };
            out[nxf + g.yf(i, j)] = a * (b - t) / g.hy;
        }
    }
}

fn finish(
    grid: &Grid,
    u: FaceField,
    p: Vec<f64>,
    force: &FaceField,
    s_v: &[f64],
    op: &MomentumOperator,
    iterations: usize,
) -> FlowResult {
    let div = face_divergence(grid, &u);
    let dr: Vec<f64> = div.iter().zip(s_v).map(|(d, s)| d - s).collect();
    let div_residual = l2_norm(grid, &dr);
    let v = pack(&u);
    let mut au = vec![0.0; v.len()];
    op.apply(&v, &mut au);
    let mut load = vec![0.0; v.len()];
    pressure_load(grid, &p, &mut load);
    let wf = pack(&FaceField::weights(grid));
    let f = pack(force);
    let mut m2 = 0.0;
    for k in 0..v.len() {
        let r = au[k] - load[k] - wf[k] * f[k];
        m2 += r * r / wf[k];
    }
    let (vx, vy) = u.to_cells();
    FlowResult {
        u,
        vx,
        vy,
        p,
        div_residual,
        momentum_residual: m2.sqrt(),
        iterations,
    }
}

/// Darcy flow `nu v + grad p = F`, `div v = s_v`, `p = 0` on the wall.
pub fn solve_darcy(
    grid: &Grid,
    force: &FaceField,
    s_v: &[f64],
    nu: f64,
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let g = *grid;
    let sp = Spectral::new(grid);
    let divf = face_divergence(grid, force);
    // -Lap p = nu s - div F
    let rhs: Vec<f64> = s_v.iter().zip(&divf).map(|(s, d)| nu * s - d).collect();
    let mut p = vec![0.0; g.len()];
    let st = pcg(
        |x, y| {
            let l = crate::grid::laplacian_lattice(&g, x, BoundaryCondition::DirichletZero);
            for k in 0..y.len() {
                y[k] = -l[k];
            }
        },
        |r, z| z.copy_from_slice(&sp.solve_dirichlet_poisson(r)),
        &rhs,
        &mut p,
        opts.tol,
        1e-300,
        opts.max_iter,
    );
    if !st.converged {
        return Err(FlowError::NotConverged {
            iterations: st.iterations,
            residual: st.residual,
        });
    }
    let gp = face_gradient(grid, &p, BoundaryCondition::DirichletZero);
    let mut u = force.clone();
    u.axpy(-1.0, &gp);
    for v in u.x.iter_mut().chain(u.y.iter_mut()) {
        *v /= nu;
    }
    let zeros = vec![0.0; g.len()];
    let op = MomentumOperator::new(grid, &zeros, &zeros, nu);
    Ok(finish(grid, u, p, force, s_v, &op, st.iterations))
}

/// Brinkman flow `-div(2 eta D v + lambda div v I) + nu v + grad p = F`,
/// `div v = s_v`, traction-free walls.
///
/// Conjugate gradients on the pressure Schur complement, preconditioned by
/// `nu (-Lap)^-1 + (2 eta + lambda)`; inner velocity solves use Jacobi-CG.
pub fn solve_brinkman(
    grid: &Grid,
    force: &FaceField,
    s_v: &[f64],
    eta: &[f64],
    lambda: &[f64],
    nu: f64,
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let g = *grid;
    let n = g.len();
    let op = MomentumOperator::new(grid, eta, lambda, nu);
    let diag = op.diagonal();
    let nf = diag.len();
    let sp = Spectral::new(grid);
    let visc_mean = (0..n).map(|c| 2.0 * eta[c] + lambda[c]).sum::<f64>() / n as f64;

    let solve_a = |rhs: &[f64]| -> Result<Vec<f64>, FlowError> {
        let mut x = vec![0.0; nf];
        let st = pcg(
            |x, y| op.apply(x, y),
            |r, z| {
                for k in 0..r.len() {
                    z[k] = r[k] / diag[k];
                }
            },
            rhs,
            &mut x,
            opts.inner_tol,
            1e-300,
            20 * nf,
        );
        if st.converged {
            Ok(x)
        } else {
            Err(FlowError::Inner(st.residual))
        }
    };
    let div_of = |v: &[f64]| face_divergence(grid, &unpack(grid, v));
    let l2 = |v: &[f64]| l2_norm(grid, v);

    let wf: Vec<f64> = pack(&FaceField::weights(grid))
        .iter()
        .zip(pack(force))
        .map(|(w, f)| w * f)
        .collect();
    let mut u = solve_a(&wf)?;
    let du0 = div_of(&u);
    let mut p = vec![0.0; n];
    let mut r: Vec<f64> = s_v.iter().zip(&du0).map(|(s, d)| s - d).collect();
    let rhs_norm = l2(&r);
    let target = (opts.tol * rhs_norm).max(1e-14 * (l2(s_v) + l2(&du0)).max(1e-300));
    let precond = |r: &[f64]| -> Vec<f64> {
        let lap_inv = sp.solve_dirichlet_poisson(r);
        (0..n).map(|k| nu * lap_inv[k] + visc_mean * r[k]).collect()
    };
    let mut iterations = 0;
    if l2(&r) > target {
        let mut z = precond(&r);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let mut load = vec![0.0; nf];
        let mut best = l2(&r);
        let mut best_at = 0;
        loop {
            iterations += 1;
            pressure_load(grid, &d, &mut load);
            let ud = solve_a(&load)?;
            let sd = div_of(&ud);
            let dsd = dot(&d, &sd);
            if !(dsd > 0.0) {
                return Err(FlowError::Stagnated {
                    iterations,
                    residual: l2(&r),
                });
            }
            let alpha = rz / dsd;
            for k in 0..n {
                p[k] += alpha * d[k];
                r[k] -= alpha * sd[k];
            }
            for k in 0..nf {
                u[k] += alpha * ud[k];
            }
            let rn = l2(&r);
            if rn <= target {
                break;
            }
            if rn < 0.999 * best {
                best = rn;
                best_at = iterations;
            } else if iterations - best_at >= 50 {
                return Err(FlowError::Stagnated {
                    iterations,
                    residual: rn,
                });
            }
            if iterations >= opts.max_iter {
                return Err(FlowError::NotConverged {
                    iterations,
                    residual: rn,
                });
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                d[k] = z[k] + beta * d[k];
            }
        }
    }
    Ok(finish(grid, unpack(grid, &u), p, force, s_v, &op, iterations))
}

/// Distance to Darcy's law, `|nu v + grad p - F|` in the face-weighted norm,
/// with the wall pressure taken as zero.
pub fn darcy_residual(grid: &Grid, u: &FaceField, p: &[f64], force: &FaceField, nu: f64) -> f64 {
    let mut r = face_gradient(grid, p, BoundaryCondition::DirichletZero);
    r.axpy(nu, u);
    r.axpy(-1.0, force);
    r.weighted_dot(&r).sqrt()
}
