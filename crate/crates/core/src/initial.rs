//! Initial states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::L;
use crate::grid::Grid;
use crate::model::{InitialCondition, ModelParameters};

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug)]
pub enum Purpose {
    Phases = 1,
    Nutrient = 2,
}

pub fn rng_for(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Random combination of cosine modes with indices below `modes`, scaled so
/// that the largest value has magnitude `amplitude`.
pub fn smooth_random(grid: &Grid, modes: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut coef = Vec::new();
    for ky in 0..modes {
        for kx in 0..modes {
            let a: f64 = rng.gen_range(-1.0..1.0);
            if kx + ky > 0 {
                coef.push((kx, ky, a / (1.0 + (kx * kx + ky * ky) as f64)));
            }
        }
    }
    let f = grid.sample(|x, y| {
        coef.iter()
            .map(|&(kx, ky, a)| {
                a * (kx as f64 * pi * x / grid.lx).cos() * (ky as f64 * pi * y / grid.ly).cos()
            })
            .sum()
    });
    let m = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return f;
    }
    f.into_iter().map(|v| v * amplitude / m).collect()
}

/// Phase lattices and nutrient for the configured initial condition.
pub fn initial_fields(
    grid: &Grid,
    init: &InitialCondition,
    _model: &ModelParameters,
    seed: u64,
) -> ([Vec<f64>; L], Vec<f64>) {
    match init {
        InitialCondition::StratifiedTumor {
            center,
            radii,
            width,
            sigma,
        } => {
            let cx = center[0] * grid.lx;
            let cy = center[1] * grid.ly;
            let inside = |r0: f64| {
                grid.sample(move |x, y| {
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    0.5 * (1.0 - ((d - r0) / (std::f64::consts::SQRT_2 * width)).tanh())
                })
            };
            let h0 = inside(radii[0]);
            let h1 = inside(radii[1]);
            let h2 = inside(radii[2]);
            let n = grid.len();
            let p1: Vec<f64> = (0..n).map(|k| h2[k] - h1[k]).collect();
            let p2: Vec<f64> = (0..n).map(|k| h1[k] - h0[k]).collect();
            ([p1, p2, h0], vec![*sigma; n])
        }
        InitialCondition::RandomSmooth {
            mean,
            amplitude,
            modes,
            sigma_mean,
            sigma_amplitude,
        } => {
            let mut rng = rng_for(seed, Purpose::Phases);
            let phi: [Vec<f64>; L] = std::array::from_fn(|i| {
                smooth_random(grid, *modes, *amplitude, &mut rng)
                    .into_iter()
                    .map(|v| v + mean[i])
                    .collect()
            });
            let mut rng = rng_for(seed, Purpose::Nutrient);
            let sigma = smooth_random(grid, *modes, *sigma_amplitude, &mut rng)
                .into_iter()
                .map(|v| v + sigma_mean)
                .collect();
            (phi, sigma)
        }
        InitialCondition::Uniform { phi, sigma } => {
            let n = grid.len();
            (std::array::from_fn(|i| vec![phi[i]; n]), vec![*sigma; n])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let a = smooth_random(&g, 4, 0.2, &mut rng_for(7, Purpose::Phases));
        let b = smooth_random(&g, 4, 0.2, &mut rng_for(7, Purpose::Phases));
        let c = smooth_random(&g, 4, 0.2, &mut rng_for(7, Purpose::Nutrient));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let m = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((m - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stratified_shells_sum_below_one() {
        let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
        let init = InitialCondition::StratifiedTumor {
            center: [0.5, 0.5],
            radii: [0.1, 0.2, 0.3],
            width: 0.02,
            sigma: 1.0,
        };
        let (phi, sigma) = initial_fields(&g, &init, &ModelParameters::default(), 0);
        for k in 0..g.len() {
            let s: f64 = phi.iter().map(|p| p[k]).sum();
            assert!(s <= 1.0 + 1e-12 && phi.iter().all(|p| p[k] >= -1e-12));
        }
        assert!(sigma.iter().all(|&s| s == 1.0));
        let c = g.idx(16, 16);
        assert!(phi[2][c] > 0.99);
    }
}
