//! Cell-centred finite-volume grid, fields and the basic difference operators.
//!
//! Cell `(i, j)` has centre `((i + 1/2) hx, (j + 1/2) hy)` and is stored at
//! `j * nx + i`. Face fields live on the `(nx + 1) x ny` vertical faces and the
//! `nx x (ny + 1)` horizontal faces, boundary faces included.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DiscretizationError {
    #[error("grid must be at least 8x8 with positive lengths, got {nx}x{ny} on {lx}x{ly}")]
    BadGrid { nx: usize, ny: usize, lx: f64, ly: f64 },
    #[error("boundary condition of component {0} is unset")]
    UnsetBoundary(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("spectral cutoff {k} outside 1..={max}")]
    Cutoff { k: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid, DiscretizationError> {
        if nx < 8 || ny < 8 || !(lx > 0.0) || !(ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(DiscretizationError::BadGrid { nx, ny, lx, ly });
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn xf(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn yf(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.center(i, j);
                out.push(f(x, y));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryCondition {
    NeumannZero,
    DirichletZero,
    /// Outward normal derivative `k (target - f)`.
    Robin { k: f64, target: f64 },
}

impl BoundaryCondition {
    /// Outward normal derivative at a boundary face adjacent to the cell
    /// value `fc`, at distance `h / 2` from the face.
    #[inline]
    pub fn outward_derivative(&self, fc: f64, h: f64) -> f64 {
        match *self {
            BoundaryCondition::NeumannZero => 0.0,
            BoundaryCondition::DirichletZero => -2.0 * fc / h,
            BoundaryCondition::Robin { k, target } => k / (1.0 + 0.5 * k * h) * (target - fc),
        }
    }

    /// Face value consistent with `outward_derivative`.
    #[inline]
    pub fn trace(&self, fc: f64, h: f64) -> f64 {
        fc + 0.5 * h * self.outward_derivative(fc, h)
    }
}

/// Values on the vertical (`x`) and horizontal (`y`) faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.n_xfaces()],
            y: vec![0.0; grid.n_yfaces()],
        }
    }

    /// Averages a cell vector field to faces; boundary faces take the
    /// adjacent cell value.
    pub fn from_cells(grid: Grid, fx: &[f64], fy: &[f64]) -> Self {
        let mut f = Self::zeros(grid);
        let (nx, ny) = (grid.nx, grid.ny);
        for j in 0..ny {
            for i in 0..=nx {
                f.x[grid.xf(i, j)] = if i == 0 {
                    fx[grid.idx(0, j)]
                } else if i == nx {
                    fx[grid.idx(nx - 1, j)]
                } else {
                    0.5 * (fx[grid.idx(i - 1, j)] + fx[grid.idx(i, j)])
                };
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                f.y[grid.yf(i, j)] = if j == 0 {
                    fy[grid.idx(i, 0)]
                } else if j == ny {
                    fy[grid.idx(i, ny - 1)]
                } else {
                    0.5 * (fy[grid.idx(i, j - 1)] + fy[grid.idx(i, j)])
                };
            }
        }
        f
    }

    /// Cell average of the two faces in each direction.
    pub fn to_cells(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let mut cx = vec![0.0; g.len()];
        let mut cy = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                cx[g.idx(i, j)] = 0.5 * (self.x[g.xf(i, j)] + self.x[g.xf(i + 1, j)]);
                cy[g.idx(i, j)] = 0.5 * (self.y[g.yf(i, j)] + self.y[g.yf(i, j + 1)]);
            }
        }
        (cx, cy)
    }

    pub fn axpy(&mut self, a: f64, other: &FaceField) {
        for (s, o) in self.x.iter_mut().zip(&other.x) {
            *s += a * o;
        }
        for (s, o) in self.y.iter_mut().zip(&other.y) {
            *s += a * o;
        }
    }

    /// Quadrature weight of each face: full cell area inside, half on the
    /// boundary.
    pub fn weights(grid: &Grid) -> FaceField {
        let mut w = FaceField::zeros(*grid);
        let a = grid.cell_area();
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                w.x[grid.xf(i, j)] = if i == 0 || i == grid.nx { 0.5 * a } else { a };
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                w.y[grid.yf(i, j)] = if j == 0 || j == grid.ny { 0.5 * a } else { a };
            }
        }
        w
    }

    pub fn weighted_dot(&self, other: &FaceField) -> f64 {
        let w = FaceField::weights(&self.grid);
        let mut s = 0.0;
        for k in 0..self.x.len() {
            s += w.x[k] * self.x[k] * other.x[k];
        }
        for k in 0..self.y.len() {
            s += w.y[k] * self.y[k] * other.y[k];
        }
        s
    }
}

/// Multi-component cell field with one boundary condition per component.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
    pub bc: Vec<Option<BoundaryCondition>>,
}

impl Field {
    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; ncomp],
            bc: vec![None; ncomp],
        }
    }

    pub fn scalar(grid: Grid, data: Vec<f64>, bc: BoundaryCondition) -> Result<Self, DiscretizationError> {
        if data.len() != grid.len() {
            return Err(DiscretizationError::Shape(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid,
            comps: vec![data],
            bc: vec![Some(bc)],
        })
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        for b in &mut self.bc {
            *b = Some(bc);
        }
        self
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn bc_of(&self, c: usize) -> Result<BoundaryCondition, DiscretizationError> {
        self.bc[c].ok_or(DiscretizationError::UnsetBoundary(c))
    }
}

/// Face gradient of one lattice. Boundary faces use the boundary condition.
pub fn face_gradient(grid: &Grid, f: &[f64], bc: BoundaryCondition) -> FaceField {
    let g = *grid;
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        let row = &f[j * g.nx..(j + 1) * g.nx];
        out.x[g.xf(0, j)] = -bc.outward_derivative(row[0], g.hx);
        for i in 1..g.nx {
            out.x[g.xf(i, j)] = (row[i] - row[i - 1]) / g.hx;
        }
        out.x[g.xf(g.nx, j)] = bc.outward_derivative(row[g.nx - 1], g.hx);
    }
    for i in 0..g.nx {
        out.y[g.yf(i, 0)] = -bc.outward_derivative(f[g.idx(i, 0)], g.hy);
        out.y[g.yf(i, g.ny)] = bc.outward_derivative(f[g.idx(i, g.ny - 1)], g.hy);
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.y[g.yf(i, j)] = (f[g.idx(i, j)] - f[g.idx(i, j - 1)]) / g.hy;
        }
    }
    out
}

/// Cell divergence of a face field.
pub fn face_divergence(grid: &Grid, u: &FaceField) -> Vec<f64> {
    let g = *grid;
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            out[g.idx(i, j)] = (u.x[g.xf(i + 1, j)] - u.x[g.xf(i, j)]) / g.hx
                + (u.y[g.yf(i, j + 1)] - u.y[g.yf(i, j)]) / g.hy;
        }
    }
    out
}

/// Five-point Laplacian, equal to `face_divergence(face_gradient(f))`.
pub fn laplacian_lattice(grid: &Grid, f: &[f64], bc: BoundaryCondition) -> Vec<f64> {
    face_divergence(grid, &face_gradient(grid, f, bc))
}

/// `div(c grad f)` with face coefficients `c`.
pub fn weighted_laplacian(grid: &Grid, f: &[f64], bc: BoundaryCondition, c: &FaceField) -> Vec<f64> {
    let mut g = face_gradient(grid, f, bc);
    for (a, b) in g.x.iter_mut().zip(&c.x) {
        *a *= b;
    }
    for (a, b) in g.y.iter_mut().zip(&c.y) {
        *a *= b;
    }
    face_divergence(grid, &g)
}

/// Cell-centred gradient: mean of the two adjacent face gradients.
pub fn centered_gradient(grid: &Grid, f: &[f64], bc: BoundaryCondition) -> (Vec<f64>, Vec<f64>) {
    face_gradient(grid, f, bc).to_cells()
}

pub fn gradient(f: &Field) -> Result<Vec<FaceField>, DiscretizationError> {
    (0..f.ncomp())
        .map(|c| Ok(face_gradient(&f.grid, &f.comps[c], f.bc_of(c)?)))
        .collect()
}

pub fn divergence(grid: &Grid, u: &FaceField) -> Vec<f64> {
    face_divergence(grid, u)
}

pub fn laplacian(f: &Field) -> Result<Field, DiscretizationError> {
    let mut out = f.clone();
    for c in 0..f.ncomp() {
        out.comps[c] = laplacian_lattice(&f.grid, &f.comps[c], f.bc_of(c)?);
    }
    Ok(out)
}

/// How a transported quantity crosses the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportClosure {
    /// No advective flux through the boundary.
    Impermeable,
    /// Boundary flux carries the linearly extrapolated trace, and the
    /// compressibility part is removed so that the operator equals
    /// `grad q . v + q s_v`.
    FreeOutflow,
}

/// Discrete `div(q v)` with centred face values. With `FreeOutflow`,
/// `q (div v - s_v)` is subtracted so a constant `q` maps to `q s_v`.
pub fn advective_divergence(
    grid: &Grid,
    q: &[f64],
    u: &FaceField,
    s_v: &[f64],
    closure: TransportClosure,
) -> Vec<f64> {
    let flux = advective_flux(grid, q, u, closure);
    let mut out = face_divergence(grid, &flux);
    if closure == TransportClosure::FreeOutflow {
        let div = face_divergence(grid, u);
        for k in 0..out.len() {
            out[k] -= q[k] * (div[k] - s_v[k]);
        }
    }
    out
}

/// Face values of `q` used by the transport operator.
pub fn transport_face_values(grid: &Grid, q: &[f64], closure: TransportClosure) -> FaceField {
    let g = *grid;
    let mut f = FaceField::zeros(g);
    let open = closure == TransportClosure::FreeOutflow;
    for j in 0..g.ny {
        for i in 1..g.nx {
            f.x[g.xf(i, j)] = 0.5 * (q[g.idx(i - 1, j)] + q[g.idx(i, j)]);
        }
        if open {
            f.x[g.xf(0, j)] = 1.5 * q[g.idx(0, j)] - 0.5 * q[g.idx(1, j)];
            f.x[g.xf(g.nx, j)] = 1.5 * q[g.idx(g.nx - 1, j)] - 0.5 * q[g.idx(g.nx - 2, j)];
        }
    }
    for i in 0..g.nx {
        for j in 1..g.ny {
            f.y[g.yf(i, j)] = 0.5 * (q[g.idx(i, j - 1)] + q[g.idx(i, j)]);
        }
        if open {
            f.y[g.yf(i, 0)] = 1.5 * q[g.idx(i, 0)] - 0.5 * q[g.idx(i, 1)];
            f.y[g.yf(i, g.ny)] = 1.5 * q[g.idx(i, g.ny - 1)] - 0.5 * q[g.idx(i, g.ny - 2)];
        }
    }
    f
}

fn advective_flux(grid: &Grid, q: &[f64], u: &FaceField, closure: TransportClosure) -> FaceField {
    let mut f = transport_face_values(grid, q, closure);
    for (a, b) in f.x.iter_mut().zip(&u.x) {
        *a *= b;
    }
    for (a, b) in f.y.iter_mut().zip(&u.y) {
        *a *= b;
    }
    f
}

/// Face force `F` such that `<F, u>_W` equals `<advective_divergence(q, u), w>`
/// for every face velocity `u` (up to the compressibility correction).
pub fn transport_dual_force(grid: &Grid, q: &[f64], w: &[f64], closure: TransportClosure) -> FaceField {
    let g = *grid;
    let qf = transport_face_values(grid, q, closure);
    let mut f = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.xf(i, j);
            f.x[k] = -qf.x[k] * (w[g.idx(i, j)] - w[g.idx(i - 1, j)]) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.yf(i, j);
            f.y[k] = -qf.y[k] * (w[g.idx(i, j)] - w[g.idx(i, j - 1)]) / g.hy;
        }
    }
    if closure == TransportClosure::FreeOutflow {
        for j in 0..g.ny {
            let l = g.xf(0, j);
            f.x[l] = -2.0 * qf.x[l] * w[g.idx(0, j)] / g.hx;
            let r = g.xf(g.nx, j);
            f.x[r] = 2.0 * qf.x[r] * w[g.idx(g.nx - 1, j)] / g.hx;
        }
        for i in 0..g.nx {
            let b = g.yf(i, 0);
            f.y[b] = -2.0 * qf.y[b] * w[g.idx(i, 0)] / g.hy;
            let t = g.yf(i, g.ny);
            f.y[t] = 2.0 * qf.y[t] * w[g.idx(i, g.ny - 1)] / g.hy;
        }
    }
    f
}

/// Cell-area quadrature `sum f g hx hy`.
pub fn inner_product(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * grid.cell_area()
}

pub fn integral(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().sum::<f64>() * grid.cell_area()
}

pub fn l2_norm(grid: &Grid, f: &[f64]) -> f64 {
    inner_product(grid, f, f).sqrt()
}

/// Boundary integral of the trace of `f` under `bc`.
pub fn boundary_integral(grid: &Grid, f: &[f64], bc: BoundaryCondition) -> f64 {
    let g = *grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        s += g.hy * bc.trace(f[g.idx(0, j)], g.hx);
        s += g.hy * bc.trace(f[g.idx(g.nx - 1, j)], g.hx);
    }
    for i in 0..g.nx {
        s += g.hx * bc.trace(f[g.idx(i, 0)], g.hy);
        s += g.hx * bc.trace(f[g.idx(i, g.ny - 1)], g.hy);
    }
    s
}

/// Visits every boundary face as `(cell index, edge length, normal spacing)`.
pub fn for_each_boundary_face(grid: &Grid, mut f: impl FnMut(usize, f64, f64)) {
    let g = *grid;
    for j in 0..g.ny {
        f(g.idx(0, j), g.hy, g.hx);
        f(g.idx(g.nx - 1, j), g.hy, g.hx);
    }
    for i in 0..g.nx {
        f(g.idx(i, 0), g.hx, g.hy);
        f(g.idx(i, g.ny - 1), g.hx, g.hy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16, 12, 1.0, 0.75).unwrap()
    }

    #[test]
    fn rejects_small_grid() {
        assert!(Grid::new(4, 16, 1.0, 1.0).is_err());
        assert!(Grid::new(16, 16, 0.0, 1.0).is_err());
    }

    #[test]
    fn unset_bc_is_error() {
        let g = grid();
        let f = Field::zeros(g, 2);
        assert_eq!(gradient(&f).unwrap_err(), DiscretizationError::UnsetBoundary(0));
    }

    #[test]
    fn laplacian_of_linear_field_in_interior() {
        let g = grid();
        let f = g.sample(|x, y| 2.0 * x - y);
        let lap = laplacian_lattice(&g, &f, BoundaryCondition::NeumannZero);
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                assert!(lap[g.idx(i, j)].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn neumann_laplacian_integrates_to_zero() {
        let g = grid();
        let f = g.sample(|x, y| (3.0 * x).sin() * (y * y + 1.0));
        let lap = laplacian_lattice(&g, &f, BoundaryCondition::NeumannZero);
        assert!(integral(&g, &lap).abs() < 1e-12);
    }

    #[test]
    fn summation_by_parts() {
        let g = grid();
        let f = g.sample(|x, y| (2.0 * x).cos() + y);
        let w = g.sample(|x, y| x * y + 0.3);
        let bc = BoundaryCondition::NeumannZero;
        let lhs = inner_product(&g, &laplacian_lattice(&g, &f, bc), &w);
        let gf = face_gradient(&g, &f, bc);
        let gw = face_gradient(&g, &w, bc);
        assert!((lhs + gf.weighted_dot(&gw)).abs() < 1e-10);
    }

    #[test]
    fn free_outflow_constant_gives_source() {
        let g = grid();
        let ux = g.sample(|x, y| x + y * y);
        let uy = g.sample(|x, y| x * y - 0.5);
        let u = FaceField::from_cells(g, &ux, &uy);
        let s: Vec<f64> = g.sample(|x, _| x.sin());
        let q = vec![2.5; g.len()];
        let out = advective_divergence(&g, &q, &u, &s, TransportClosure::FreeOutflow);
        for k in 0..g.len() {
            assert!((out[k] - 2.5 * s[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn impermeable_transport_conserves_mass() {
        let g = grid();
        let u = FaceField::from_cells(g, &g.sample(|x, _| x), &g.sample(|_, y| -y));
        let q = g.sample(|x, y| (x * y).exp());
        let out = advective_divergence(&g, &q, &u, &vec![0.0; g.len()], TransportClosure::Impermeable);
        assert!(integral(&g, &out).abs() < 1e-12);
    }

    #[test]
    fn dual_force_matches_transport() {
        let g = grid();
        let ux = g.sample(|x, y| (x - y).sin());
        let uy = g.sample(|x, y| (x * y).cos());
        let u = FaceField::from_cells(g, &ux, &uy);
        let q = g.sample(|x, y| 1.0 + x * y);
        let w = g.sample(|x, y| (2.0 * x + y).sin());
        let zero = vec![0.0; g.len()];
        for closure in [TransportClosure::Impermeable, TransportClosure::FreeOutflow] {
            let f = transport_dual_force(&g, &q, &w, closure);
            let mut lhs = inner_product(&g, &advective_divergence(&g, &q, &u, &zero, closure), &w);
            if closure == TransportClosure::FreeOutflow {
                let div = face_divergence(&g, &u);
                let qd: Vec<f64> = (0..g.len()).map(|k| q[k] * div[k]).collect();
                lhs += inner_product(&g, &qd, &w);
            }
            let rhs = f.weighted_dot(&u);
            assert!((lhs - rhs).abs() < 1e-11, "{closure:?} {lhs} {rhs}");
        }
    }

    #[test]
    fn robin_trace_and_boundary_integral() {
        let g = grid();
        let f = vec![1.0; g.len()];
        let per = 2.0 * (g.lx + g.ly);
        assert!((boundary_integral(&g, &f, BoundaryCondition::NeumannZero) - per).abs() < 1e-12);
        let bc = BoundaryCondition::Robin { k: 1e12, target: 3.0 };
        assert!((bc.trace(1.0, 0.1) - 3.0).abs() < 1e-9);
        assert!(BoundaryCondition::DirichletZero.trace(1.7, 0.1).abs() < 1e-15);
    }
}
