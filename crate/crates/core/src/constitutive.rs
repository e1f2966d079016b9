//! Pointwise constitutive laws: potential, chemical energy, sources,
//! mobility and viscosity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::ModelParameters;

/// Number of phase fields.
pub const L: usize = 3;

pub type Phases = [f64; L];

/// Smooth bounded truncation: identity on `[-r, 1 + r]`, tanh tails outside.
pub fn truncation(s: f64, r: f64) -> f64 {
    if s > 1.0 + r {
        1.0 + r + (s - 1.0 - r).tanh()
    } else if s < -r {
        -r + (s + r).tanh()
    } else {
        s
    }
}

pub fn truncation_derivative(s: f64, r: f64) -> f64 {
    if s > 1.0 + r {
        let t = (s - 1.0 - r).tanh();
        1.0 - t * t
    } else if s < -r {
        let t = (s + r).tanh();
        1.0 - t * t
    } else {
        1.0
    }
}

/// Saturating proliferation rate. Linear on `[0, c_p - 1]`, a monotone cubic
/// bridge up to `c_p`, constant afterwards and `rate * tanh(s)` for `s < 0`.
pub fn proliferation(s: f64, rate: f64, c_p: f64) -> f64 {
    let a = c_p - 1.0;
    if s < 0.0 {
        rate * s.tanh()
    } else if s <= a {
        rate * s
    } else if s < c_p {
        let t = s - a;
        rate * (a + t + t * t - t * t * t)
    } else {
        rate * c_p
    }
}

pub fn proliferation_derivative(s: f64, rate: f64, c_p: f64) -> f64 {
    let a = c_p - 1.0;
    if s < 0.0 {
        let t = s.tanh();
        rate * (1.0 - t * t)
    } else if s <= a {
        rate
    } else if s < c_p {
        let t = s - a;
        rate * (1.0 - t) * (3.0 * t + 1.0)
    } else {
        0.0
    }
}

/// Interface indicator `s^2 (1 - s^2)^2`.
pub fn interface_indicator(s: f64) -> f64 {
    let q = 1.0 - s * s;
    s * s * q * q
}

/// Returns the raw indicator and its truncated counterpart.
pub fn interface_polynomial(s: f64, r: f64) -> (f64, f64) {
    (interface_indicator(s), interface_indicator(truncation(s, r)))
}

/// Double-well potential `sum psi(p_i)` with a convex split
/// `Psi = Psi1 + Psi2`, `Psi2 = -shift |p|^2 / 2`.
///
/// Each `psi` is `x^2 (1 - x)^2` on the core `[-core_radius, 1 + core_radius]`
/// and, when a core radius is set, continues as the second-order Taylor
/// polynomial outside, which keeps the Hessian bounded and the growth
/// quadratic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub split_shift: f64,
    pub core_radius: Option<f64>,
    pub offset: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            split_shift: 1.0,
            core_radius: Some(1.0),
            offset: 1.0,
        }
    }
}

fn quartic(x: f64) -> (f64, f64, f64) {
    let v = x * x * (1.0 - x) * (1.0 - x);
    let d = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let dd = 12.0 * x * x - 12.0 * x + 2.0;
    (v, d, dd)
}

impl PotentialSpec {
    /// Value, first and second derivative of the one-dimensional well.
    pub fn well(&self, x: f64) -> (f64, f64, f64) {
        if let Some(rc) = self.core_radius {
            let lo = -rc;
            let hi = 1.0 + rc;
            let anchor = if x > hi {
                Some(hi)
            } else if x < lo {
                Some(lo)
            } else {
                None
            };
            if let Some(x0) = anchor {
                let (v, d, dd) = quartic(x0);
                let t = x - x0;
                return (v + d * t + 0.5 * dd * t * t, d + dd * t, dd);
            }
        }
        quartic(x)
    }

    pub fn psi(&self, p: &Phases) -> f64 {
        p.iter().map(|&x| self.well(x).0).sum()
    }

    pub fn grad(&self, p: &Phases) -> Phases {
        let mut g = [0.0; L];
        for (gi, &x) in g.iter_mut().zip(p) {
            *gi = self.well(x).1;
        }
        g
    }

    /// Diagonal of the Hessian (the potential is separable).
    pub fn hess_diag(&self, p: &Phases) -> Phases {
        let mut h = [0.0; L];
        for (hi, &x) in h.iter_mut().zip(p) {
            *hi = self.well(x).2;
        }
        h
    }

    /// Convex part: derivative and second derivative of `psi + shift x^2 / 2`.
    pub fn convex_well(&self, x: f64) -> (f64, f64) {
        let (_, d, dd) = self.well(x);
        (d + self.split_shift * x, dd + self.split_shift)
    }

    /// Derivative of the concave part `-shift x^2 / 2`.
    pub fn concave_derivative(&self, x: f64) -> f64 {
        -self.split_shift * x
    }

    pub fn min_curvature(&self) -> f64 {
        // 12x^2 - 12x + 2 attains -1 at x = 1/2; the tails have constant
        // curvature equal to the junction value, which is larger.
        -1.0
    }

    pub fn max_curvature(&self) -> Option<f64> {
        self.core_radius.map(|rc| quartic(1.0 + rc).2.max(quartic(-rc).2))
    }

    /// Lower bound of `psi(x) / x^2` for `x` outside `[lo, hi]`.
    fn tail_ratio_bound(&self, lo: f64, hi: f64) -> f64 {
        let Some(rc) = self.core_radius else {
            // Quartic growth: psi/x^2 = (1 - x)^2 is minimised at the edge.
            return (1.0 - hi).powi(2).min((1.0 - lo).powi(2));
        };
        let mut best = f64::INFINITY;
        for (x0, tmin, tmax) in [(1.0 + rc, 0.0, 1.0 / hi), (-rc, 1.0 / lo, 0.0)] {
            // psi(x)/x^2 = c0 t^2 + c1 t + c2 with t = 1/x on the tail.
            let (v, d, dd) = quartic(x0);
            let c2 = 0.5 * dd;
            let c1 = d - dd * x0;
            let c0 = v - d * x0 + 0.5 * dd * x0 * x0;
            let f = |t: f64| c0 * t * t + c1 * t + c2;
            best = best.min(f(tmin)).min(f(tmax));
            if c0 > 0.0 {
                let tv = -c1 / (2.0 * c0);
                if tv > tmin && tv < tmax {
                    best = best.min(f(tv));
                }
            }
        }
        best
    }

    /// Quadratic coercivity constant: the largest `A` with
    /// `Psi(p) + offset >= A |p|^2`, estimated on the lattice `[-3, 4]^3`
    /// with spacing 0.05 and closed with an analytic bound on the tails.
    pub fn coercivity(&self) -> f64 {
        let n = 141usize;
        let lo = -3.0;
        let hi = 4.0;
        let xs: Vec<f64> = (0..n).map(|k| lo + 0.05 * k as f64).collect();
        let w: Vec<f64> = xs.iter().map(|&x| self.well(x).0).collect();
        let sq: Vec<f64> = xs.iter().map(|&x| x * x).collect();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                let wab = w[a] + w[b] + self.offset;
                let sab = sq[a] + sq[b];
                for c in 0..n {
                    let s = sab + sq[c];
                    if s < 1e-14 {
                        continue;
                    }
                    let r = (wab + w[c]) / s;
                    if r < best {
                        best = r;
                    }
                }
            }
        }
        best.min(self.tail_ratio_bound(lo, hi))
    }
}

/// Chemical free-energy density
/// `chi_sigma/2 s^2 + s . (-B p - b) - a . p - c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChemicalEnergySpec {
    pub chi_sigma: f64,
    pub b_mat: Phases,
    pub a: Phases,
    pub b: f64,
    pub c: f64,
}

impl ChemicalEnergySpec {
    pub fn from_params(m: &ModelParameters) -> Self {
        Self {
            chi_sigma: m.chi_sigma,
            b_mat: [m.chi_phi, -m.alpha, -m.beta],
            a: [0.0, m.alpha * m.c_q, m.beta * m.c_n],
            b: 0.0,
            c: 0.0,
        }
    }

    pub fn density(&self, p: &Phases, s: f64) -> f64 {
        let bp: f64 = self.b_mat.iter().zip(p).map(|(b, x)| b * x).sum();
        let ap: f64 = self.a.iter().zip(p).map(|(a, x)| a * x).sum();
        0.5 * self.chi_sigma * s * s - s * (bp + self.b) - ap - self.c
    }

    pub fn d_phi(&self, _p: &Phases, s: f64) -> Phases {
        let mut g = [0.0; L];
        for i in 0..L {
            g[i] = -self.b_mat[i] * s - self.a[i];
        }
        g
    }

    pub fn d_sigma(&self, p: &Phases, s: f64) -> f64 {
        let bp: f64 = self.b_mat.iter().zip(p).map(|(b, x)| b * x).sum();
        self.chi_sigma * s - bp - self.b
    }

    /// Coupling bound `max(|B|, |a|, |b|, |c|)`.
    pub fn coupling_bound(&self) -> f64 {
        let nb = self.b_mat.iter().map(|x| x * x).sum::<f64>().sqrt();
        let na = self.a.iter().map(|x| x * x).sum::<f64>().sqrt();
        nb.max(na).max(self.b.abs()).max(self.c.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceVariant {
    Linear,
    Interfacial,
}

/// Mass exchange terms for the three phases and the nutrient.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub variant: SourceVariant,
    pub p_rate: f64,
    pub q_rate: f64,
    pub a_rate: f64,
    pub d_rate: f64,
    pub c_rate: f64,
    pub b_rate: f64,
    pub kappa: f64,
    pub c_p: f64,
    pub r: f64,
    pub sigma_omega: f64,
    pub epsilon: f64,
    /// Rows weight the chemical potential in `S_phi = Lambda - theta m`.
    pub theta_phi: [Phases; L],
    pub theta_sigma: Phases,
}

impl SourceSpec {
    pub fn from_params(m: &ModelParameters, variant: SourceVariant) -> Self {
        Self {
            variant,
            p_rate: m.p_rate,
            q_rate: m.q_rate,
            a_rate: m.a_rate,
            d_rate: m.d_rate,
            c_rate: m.c_rate,
            b_rate: m.b_rate,
            kappa: m.kappa,
            c_p: m.c_p,
            r: m.r,
            sigma_omega: m.sigma_omega,
            epsilon: m.epsilon,
            theta_phi: [[0.0; L]; L],
            theta_sigma: [0.0; L],
        }
    }

    fn h(&self, s: f64) -> f64 {
        truncation(s, self.r)
    }

    fn prolif(&self, s: f64) -> f64 {
        proliferation(s, self.p_rate, self.c_p)
    }

    /// Potential-independent part of the phase sources.
    pub fn lambda_phi(&self, p: &Phases, s: f64) -> Phases {
        match self.variant {
            SourceVariant::Linear => {
                let h1 = self.h(p[0]);
                [
                    h1 * self.prolif(s) - self.q_rate * p[0],
                    self.q_rate * p[0] - self.a_rate * p[1],
                    self.a_rate * p[1] - self.d_rate * self.h(p[2]),
                ]
            }
            SourceVariant::Interfacial => {
                let k = 1.0 / self.epsilon;
                let w = |x: f64| interface_indicator(self.h(x));
                [
                    k * w(p[0]) * (self.prolif(s) - self.q_rate),
                    k * w(p[1]) * (self.q_rate - self.a_rate),
                    k * w(p[2]) * (self.a_rate - self.d_rate),
                ]
            }
        }
    }

    pub fn source_phi(&self, p: &Phases, s: f64, m: &Phases) -> Phases {
        let mut out = self.lambda_phi(p, s);
        for (i, o) in out.iter_mut().enumerate() {
            let tm: f64 = self.theta_phi[i].iter().zip(m).map(|(t, x)| t * x).sum();
            *o -= tm;
        }
        out
    }

    pub fn source_nutrient(&self, p: &Phases, s: f64, m: &Phases) -> f64 {
        let tm: f64 = self.theta_sigma.iter().zip(m).map(|(t, x)| t * x).sum();
        self.c_rate * self.h(p[0]) * s - self.b_rate * (self.sigma_omega - s) - tm
    }

    /// Volume source: sum of the phase sources plus the extra decay term of
    /// the linear variant.
    pub fn source_volume(&self, p: &Phases, s: f64, m: &Phases) -> f64 {
        let base: f64 = self.source_phi(p, s, m).iter().sum();
        match self.variant {
            SourceVariant::Linear => base - self.kappa * self.prolif(s) * self.h(p[0]),
            SourceVariant::Interfacial => base,
        }
    }

    fn prolif_sup(&self) -> f64 {
        self.p_rate * self.c_p
    }

    fn indicator_sup(&self) -> f64 {
        let hi = 2.0 + self.r;
        let lo = 1.0 + self.r;
        interface_indicator(hi)
            .max(interface_indicator(lo))
            .max(4.0 / 27.0)
    }

    /// Constant `B` with `|S_phi| + |S_sigma| <= B (|p| + |s| + |m| + 1)`.
    pub fn growth_constant(&self) -> f64 {
        let theta: f64 = self
            .theta_phi
            .iter()
            .flatten()
            .chain(self.theta_sigma.iter())
            .map(|x| x.abs())
            .sum();
        let phase = match self.variant {
            SourceVariant::Linear => {
                self.prolif_sup() + 2.0 * self.q_rate + 2.0 * self.a_rate + self.d_rate
            }
            SourceVariant::Interfacial => {
                let k = self.indicator_sup() / self.epsilon;
                k * (self.prolif_sup()
                    + self.q_rate
                    + (self.q_rate - self.a_rate).abs()
                    + (self.a_rate - self.d_rate).abs())
            }
        };
        let nutrient = self.c_rate * (2.0 + self.r) + self.b_rate * (1.0 + self.sigma_omega.abs());
        phase + nutrient + theta
    }

    /// Uniform bound on the volume source (zero potential weights assumed).
    pub fn volume_bound(&self) -> f64 {
        let hmax = 2.0 + self.r;
        match self.variant {
            SourceVariant::Linear => {
                (1.0 - self.kappa).abs() * hmax * self.prolif_sup() + self.d_rate * hmax
            }
            SourceVariant::Interfacial => {
                let k = self.indicator_sup() / self.epsilon;
                k * (self.prolif_sup()
                    + self.q_rate
                    + (self.q_rate - self.a_rate).abs()
                    + (self.a_rate - self.d_rate).abs())
            }
        }
    }
}

pub type PhaseLaw = Arc<dyn Fn(&Phases, f64) -> f64 + Send + Sync>;

/// Per-phase mobility with a positive floor.
#[derive(Clone)]
pub struct MobilitySpec {
    pub laws: Vec<Option<PhaseLaw>>,
    pub constant: f64,
    /// Nutrient mobility.
    pub nutrient: f64,
    pub floor: f64,
}

impl std::fmt::Debug for MobilitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MobilitySpec")
            .field("constant", &self.constant)
            .field("floor", &self.floor)
            .field("custom", &self.laws.iter().filter(|l| l.is_some()).count())
            .finish()
    }
}

impl Default for MobilitySpec {
    fn default() -> Self {
        Self {
            laws: vec![None; L],
            constant: 1.0,
            nutrient: 1.0,
            floor: 1e-8,
        }
    }
}

impl MobilitySpec {
    pub fn with_law(mut self, phase: usize, law: PhaseLaw) -> Self {
        self.laws[phase] = Some(law);
        self
    }

    pub fn eval(&self, phase: usize, p: &Phases, s: f64) -> f64 {
        let raw = match &self.laws[phase] {
            Some(f) => f(p, s),
            None => self.constant,
        };
        raw.max(self.floor)
    }

    pub fn nutrient_mobility(&self) -> f64 {
        self.nutrient.max(self.floor)
    }

    pub fn is_constant(&self) -> bool {
        self.laws.iter().all(|l| l.is_none())
    }
}

/// Shear and bulk viscosity. With `contrast > 0` the shear viscosity rises
/// smoothly in the proliferating phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscositySpec {
    pub eta0: f64,
    pub lambda0: f64,
    pub contrast: f64,
}

impl ViscositySpec {
    pub fn constant(eta0: f64, lambda0: f64) -> Self {
        Self {
            eta0,
            lambda0,
            contrast: 0.0,
        }
    }

    pub fn eta(&self, p: &Phases) -> f64 {
        if self.contrast == 0.0 {
            return self.eta0;
        }
        let w = 0.5 * (1.0 + (4.0 * (p[0] - 0.5)).tanh());
        self.eta0 * (1.0 + self.contrast * w)
    }

    pub fn lambda(&self, _p: &Phases) -> f64 {
        self.lambda0
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.eta0, self.eta0 * (1.0 + self.contrast.max(0.0)))
    }
}

/// Cauchy stress `2 eta D + lambda tr(D) I - p I` for a 2x2 velocity gradient.
pub fn stress(eta: f64, lambda: f64, grad_v: [[f64; 2]; 2], p: f64) -> [[f64; 2]; 2] {
    let d01 = 0.5 * (grad_v[0][1] + grad_v[1][0]);
    let div = grad_v[0][0] + grad_v[1][1];
    [
        [2.0 * eta * grad_v[0][0] + lambda * div - p, 2.0 * eta * d01],
        [2.0 * eta * d01, 2.0 * eta * grad_v[1][1] + lambda * div - p],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn truncation_is_c1_at_junctions() {
        for r in [0.5, 1.0, 2.0] {
            for x in [-r, 1.0 + r] {
                let left = (truncation(x, r) - truncation(x - 1e-7, r)) / 1e-7;
                let right = (truncation(x + 1e-7, r) - truncation(x, r)) / 1e-7;
                assert!((left - right).abs() < 1e-5);
                assert!((truncation_derivative(x, r) - 1.0).abs() < 1e-12);
            }
            assert!((truncation(1e6, r) - (2.0 + r)).abs() < 1e-12);
        }
        assert_eq!(truncation(0.3, 1.0), 0.3);
        assert!((truncation(5.0, 1.0) - (2.0 + 3f64.tanh())).abs() < 1e-15);
    }

    #[test]
    fn proliferation_shape() {
        assert!((proliferation(0.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(proliferation(10.0, 1.0, 2.0), 2.0);
        for x in [-0.4, 0.0, 0.7, 1.0, 1.3, 1.8, 2.0, 3.0] {
            let d = fd(|s| proliferation(s, 1.5, 2.0), x);
            assert!((d - proliferation_derivative(x, 1.5, 2.0)).abs() < 1e-5, "{x}");
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..400 {
            let v = proliferation(-1.0 + 0.01 * k as f64, 1.0, 2.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn well_matches_quartic_in_core_and_is_c2() {
        let pot = PotentialSpec::default();
        assert!((pot.well(0.5).0 - 0.0625).abs() < 1e-15);
        assert_eq!(pot.psi(&[0.0, 1.0, 0.0]), 0.0);
        for x in [-1.0, 2.0] {
            let a = pot.well(x - 1e-9);
            let b = pot.well(x + 1e-9);
            assert!((a.0 - b.0).abs() < 1e-7);
            assert!((a.1 - b.1).abs() < 1e-6);
            assert!((a.2 - b.2).abs() < 1e-6);
        }
        assert!((pot.well(2.0).0 - 4.0).abs() < 1e-12);
        assert!((pot.well(2.0).1 - 12.0).abs() < 1e-12);
        assert!((pot.well(-1.0).1 + 12.0).abs() < 1e-12);
        assert_eq!(pot.max_curvature(), Some(26.0));
        for x in [-3.0, -0.2, 0.4, 1.1, 3.5] {
            assert!((fd(|y| pot.well(y).0, x) - pot.well(x).1).abs() < 1e-5);
            assert!((fd(|y| pot.well(y).1, x) - pot.well(x).2).abs() < 1e-5);
        }
    }

    #[test]
    fn convex_part_is_convex() {
        let pot = PotentialSpec::default();
        for k in 0..1000 {
            let x = -5.0 + 0.01 * k as f64;
            assert!(pot.convex_well(x).1 >= -1e-12);
        }
    }

    #[test]
    fn chemical_potential_examples() {
        let m = ModelParameters::default();
        let chem = ChemicalEnergySpec::from_params(&m);
        let ns = chem.d_sigma(&[0.0, 1.0, 0.0], 0.5);
        assert!((ns - (0.5 * m.chi_sigma + m.alpha)).abs() < 1e-15);
        assert!((chem.coupling_bound() - 6f64.sqrt()).abs() < 1e-14);
        let p = [0.3, 0.2, 0.1];
        let s = 0.7;
        let g = chem.d_phi(&p, s);
        for i in 0..L {
            let mut q = p;
            q[i] += 1e-6;
            let mut r = p;
            r[i] -= 1e-6;
            let d = (chem.density(&q, s) - chem.density(&r, s)) / 2e-6;
            assert!((d - g[i]).abs() < 1e-8);
        }
        let d = (chem.density(&p, s + 1e-6) - chem.density(&p, s - 1e-6)) / 2e-6;
        assert!((d - chem.d_sigma(&p, s)).abs() < 1e-8);
    }

    #[test]
    fn source_examples() {
        let mut m = ModelParameters::default();
        m.kappa = 1.0;
        let src = SourceSpec::from_params(&m, SourceVariant::Linear);
        assert!(src.source_volume(&[1.0, 0.0, 0.0], 0.5, &[0.0; 3]).abs() < 1e-15);
        m.c_rate = 1.0;
        m.b_rate = 0.0;
        let src = SourceSpec::from_params(&m, SourceVariant::Linear);
        assert!((src.source_nutrient(&[1.0, 0.0, 0.0], 1.0, &[0.0; 3]) - 1.0).abs() < 1e-15);
        let m = ModelParameters::default();
        let src = SourceSpec::from_params(&m, SourceVariant::Interfacial);
        let s = src.source_phi(&[1.0, 0.0, 1.0], 0.3, &[0.0; 3]);
        assert!(s.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn mobility_floor() {
        let mob = MobilitySpec::default()
            .with_law(0, Arc::new(|p: &Phases, _s| 1.0 + p[0] * p[0]))
            .with_law(1, Arc::new(|_p: &Phases, _s| 1e-9));
        assert_eq!(mob.eval(0, &[2.0, 0.0, 0.0], 0.0), 5.0);
        assert_eq!(mob.eval(1, &[0.0; 3], 0.0), 1e-8);
        assert_eq!(mob.eval(2, &[0.0; 3], 0.0), 1.0);
    }

    #[test]
    fn stress_of_shear_flow() {
        let t = stress(2.0, 0.5, [[0.0, 1.0], [0.0, 0.0]], 0.3);
        assert_eq!(t[0][1], 2.0);
        assert_eq!(t[1][0], 2.0);
        assert_eq!(t[0][0], -0.3);
    }
}
