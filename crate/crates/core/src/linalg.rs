//! Matrix-free Krylov solvers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for an SPD operator. Stops when the
/// residual falls below `max(rtol * |b|, atol)`.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let target = (rtol * norm(b)).max(atol);
    let mut rn = norm(&r);
    if rn <= target {
        return SolveStats {
            iterations: 0,
            residual: rn,
            converged: true,
        };
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return SolveStats {
                iterations: it,
                residual: rn,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rn = norm(&r);
        if rn <= target {
            return SolveStats {
                iterations: it,
                residual: rn,
                converged: true,
            };
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    SolveStats {
        iterations: max_iter,
        residual: rn,
        converged: false,
    }
}

/// Restarted GMRES with right preconditioning.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    atol: f64,
    restart: usize,
    max_iter: usize,
) -> SolveStats {
    let n = b.len();
    let m = restart.max(1);
    let target = (rtol * norm(b)).max(atol);
    let mut total = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        apply(x, &mut w);
        let r: Vec<f64> = b.iter().zip(&w).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= target || total >= max_iter {
            return SolveStats {
                iterations: total,
                residual: beta,
                converged: beta <= target,
            };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            precond(&v[k], &mut z);
            apply(&z, &mut w);
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                for t in 0..n {
                    w[t] -= h[i][k] * v[i][t];
                }
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let tmp = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = tmp;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            let hk1 = h[k + 1][k];
            h[k][k] = cs[k] * h[k][k] + sn[k] * hk1;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let breakdown = den.abs() < 1e-300 || hk1 == 0.0;
            if g[k + 1].abs() <= target || total >= max_iter || breakdown {
                break;
            }
            let hn = hk1;
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // Back substitution and update x += M^-1 V y.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut upd = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for t in 0..n {
                upd[t] += yj * v[j][t];
            }
        }
        precond(&upd, &mut z);
        for t in 0..n {
            x[t] += z[t];
        }
        if k_used == 0 {
            apply(x, &mut w);
            let res = norm(&b.iter().zip(&w).map(|(b, a)| b - a).collect::<Vec<_>>());
            return SolveStats {
                iterations: total,
                residual: res,
                converged: res <= target,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], y: &mut [f64], shift: f64, skew: f64) {
        let n = x.len();
        for i in 0..n {
            let mut v = (2.0 + shift) * x[i];
            if i > 0 {
                v -= (1.0 + skew) * x[i - 1];
            }
            if i + 1 < n {
                v -= (1.0 - skew) * x[i + 1];
            }
            y[i] = v;
        }
    }

    #[test]
    fn cg_solves_spd() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let st = pcg(
            |x, y| tridiag(x, y, 0.1, 0.0),
            |r, z| z.copy_from_slice(r),
            &b,
            &mut x,
            1e-12,
            0.0,
            500,
        );
        assert!(st.converged);
        let mut ax = vec![0.0; n];
        tridiag(&x, &mut ax, 0.1, 0.0);
        assert!(ax.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn gmres_solves_nonsymmetric() {
        let n = 60;
        let b: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        let st = gmres(
            |x, y| tridiag(x, y, 0.5, 0.3),
            |r, z| {
                for i in 0..r.len() {
                    z[i] = r[i] / 2.5;
                }
            },
            &b,
            &mut x,
            1e-12,
            0.0,
            20,
            2000,
        );
        assert!(st.converged, "{st:?}");
        let mut ax = vec![0.0; n];
        tridiag(&x, &mut ax, 0.5, 0.3);
        assert!(ax.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}
