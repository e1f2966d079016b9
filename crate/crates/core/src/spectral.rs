//! Fast diagonalisation of the five-point Laplacian with cosine (Neumann)
//! and sine (ghost Dirichlet) transforms.

use std::sync::Arc;

use rustdct::{Dct2, Dct3, DctPlanner, Dst2, Dst3};

use crate::grid::{DiscretizationError, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Eigenvectors of the Neumann Laplacian, `cos(k pi (i + 1/2) / n)`.
    Cosine,
    /// Eigenvectors of the ghost-Dirichlet Laplacian, `sin((k + 1) pi (i + 1/2) / n)`.
    Sine,
}

struct Axis {
    n: usize,
    fwd_c: Arc<dyn Dct2<f64>>,
    inv_c: Arc<dyn Dct3<f64>>,
    fwd_s: Arc<dyn Dst2<f64>>,
    inv_s: Arc<dyn Dst3<f64>>,
    lam_c: Vec<f64>,
    lam_s: Vec<f64>,
}

impl Axis {
    fn new(planner: &mut DctPlanner<f64>, n: usize, h: f64) -> Self {
        let pi = std::f64::consts::PI;
        Self {
            n,
            fwd_c: planner.plan_dct2(n),
            inv_c: planner.plan_dct3(n),
            fwd_s: planner.plan_dst2(n),
            inv_s: planner.plan_dst3(n),
            lam_c: (0..n)
                .map(|k| (2.0 - 2.0 * (k as f64 * pi / n as f64).cos()) / (h * h))
                .collect(),
            lam_s: (0..n)
                .map(|k| (2.0 - 2.0 * ((k + 1) as f64 * pi / n as f64).cos()) / (h * h))
                .collect(),
        }
    }

    fn forward(&self, basis: Basis, buf: &mut [f64]) {
        match basis {
            Basis::Cosine => self.fwd_c.process_dct2(buf),
            Basis::Sine => self.fwd_s.process_dst2(buf),
        }
    }

    /// Exact inverse of `forward`.
    fn inverse(&self, basis: Basis, buf: &mut [f64]) {
        match basis {
            Basis::Cosine => self.inv_c.process_dct3(buf),
            Basis::Sine => self.inv_s.process_dst3(buf),
        }
        let s = 2.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    fn eig(&self, basis: Basis) -> &[f64] {
        match basis {
            Basis::Cosine => &self.lam_c,
            Basis::Sine => &self.lam_s,
        }
    }
}

/// Transform pair for a fixed grid.
pub struct Spectral {
    grid: Grid,
    ax: Axis,
    ay: Axis,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = DctPlanner::new();
        Self {
            grid: *grid,
            ax: Axis::new(&mut planner, grid.nx, grid.hx),
            ay: Axis::new(&mut planner, grid.ny, grid.hy),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, basis: Basis, data: &mut [f64], forward: bool) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for row in data.chunks_mut(nx) {
            if forward {
                self.ax.forward(basis, row);
            } else {
                self.ax.inverse(basis, row);
            }
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            if forward {
                self.ay.forward(basis, &mut col);
            } else {
                self.ay.inverse(basis, &mut col);
            }
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    }

    pub fn forward(&self, basis: Basis, data: &mut [f64]) {
        self.transform(basis, data, true);
    }

    pub fn inverse(&self, basis: Basis, data: &mut [f64]) {
        self.transform(basis, data, false);
    }

    /// Eigenvalue of `-Laplacian` for mode `(kx, ky)`.
    pub fn eigenvalue(&self, basis: Basis, kx: usize, ky: usize) -> f64 {
        self.ax.eig(basis)[kx] + self.ay.eig(basis)[ky]
    }

    /// Returns `x` with `x_hat = r_hat * symbol(lambda)` where `lambda` is
    /// the eigenvalue of `-Laplacian`.
    pub fn apply_symbol(&self, basis: Basis, r: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut buf = r.to_vec();
        self.forward(basis, &mut buf);
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let ex = self.ax.eig(basis);
        let ey = self.ay.eig(basis);
        for ky in 0..ny {
            for kx in 0..nx {
                buf[ky * nx + kx] *= symbol(ex[kx] + ey[ky]);
            }
        }
        self.inverse(basis, &mut buf);
        buf
    }

    /// Solves `-Laplacian x = r` with ghost-Dirichlet boundaries.
    pub fn solve_dirichlet_poisson(&self, r: &[f64]) -> Vec<f64> {
        self.apply_symbol(Basis::Sine, r, |l| 1.0 / l)
    }

    /// Keeps the cosine modes with both indices below `k`.
    pub fn project(&self, f: &[f64], k: usize) -> Result<Vec<f64>, DiscretizationError> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let max = nx.min(ny);
        if k == 0 || k > max {
            return Err(DiscretizationError::Cutoff { k, max });
        }
        let mut buf = f.to_vec();
        self.forward(Basis::Cosine, &mut buf);
        for ky in 0..ny {
            for kx in 0..nx {
                if kx >= k || ky >= k {
                    buf[ky * nx + kx] = 0.0;
                }
            }
        }
        self.inverse(Basis::Cosine, &mut buf);
        Ok(buf)
    }
}

/// Projection onto the first `k x k` cosine modes.
pub fn spectral_project(grid: &Grid, f: &[f64], k: usize) -> Result<Vec<f64>, DiscretizationError> {
    Spectral::new(grid).project(f, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_lattice, BoundaryCondition};

    fn grid() -> Grid {
        Grid::new(12, 10, 1.2, 0.7).unwrap()
    }

    fn pseudo(n: usize) -> Vec<f64> {
        (0..n).map(|k| ((k * 7919 % 97) as f64 / 97.0) - 0.4).collect()
    }

    #[test]
    fn roundtrip_both_bases() {
        let g = grid();
        let sp = Spectral::new(&g);
        let f = pseudo(g.len());
        for b in [Basis::Cosine, Basis::Sine] {
            let mut buf = f.clone();
            sp.forward(b, &mut buf);
            sp.inverse(b, &mut buf);
            for k in 0..f.len() {
                assert!((buf[k] - f[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symbols_diagonalise_laplacians() {
        let g = grid();
        let sp = Spectral::new(&g);
        let f = pseudo(g.len());
        for (b, bc) in [
            (Basis::Cosine, BoundaryCondition::NeumannZero),
            (Basis::Sine, BoundaryCondition::DirichletZero),
        ] {
            let direct = laplacian_lattice(&g, &f, bc);
            let spec = sp.apply_symbol(b, &f, |l| -l);
            for k in 0..f.len() {
                assert!((direct[k] - spec[k]).abs() < 1e-9, "{b:?}");
            }
        }
    }

    #[test]
    fn dirichlet_poisson_inverts() {
        let g = grid();
        let sp = Spectral::new(&g);
        let r = pseudo(g.len());
        let x = sp.solve_dirichlet_poisson(&r);
        let back = laplacian_lattice(&g, &x, BoundaryCondition::DirichletZero);
        for k in 0..r.len() {
            assert!((back[k] + r[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_keeps_mean_and_cutoff_errors() {
        let g = grid();
        let f = pseudo(g.len());
        let p1 = spectral_project(&g, &f, 1).unwrap();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert!(p1.iter().all(|v| (v - mean).abs() < 1e-12));
        assert!(spectral_project(&g, &f, 0).is_err());
        assert!(spectral_project(&g, &f, 11).is_err());
        let full = spectral_project(&g, &f, 10).unwrap();
        let twice = spectral_project(&g, &full, 10).unwrap();
        for k in 0..f.len() {
            assert!((full[k] - twice[k]).abs() < 1e-12);
        }
    }
}
