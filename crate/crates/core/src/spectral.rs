//! Second-largest singular value of a doubly stochastic matrix.
//!
//! Small matrices go through a one-sided Jacobi SVD; larger ones use power
//! iteration on `AᵀA` with the known top singular pair `(1, 1/√n)` deflated.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("power iteration did not converge within {0} steps")]
    NonConvergence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2Options {
    /// Matrices with `n` at or below this use the dense decomposition.
    pub dense_threshold: usize,
    /// Relative change in the estimate at which power iteration stops.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for Sigma2Options {
    fn default() -> Self {
        Self {
            dense_threshold: 64,
            tolerance: 1e-10,
            max_iters: 200_000,
        }
    }
}

/// `entries` is row-major `n×n`. The matrix must be doubly stochastic so that
/// `1/√n` is a top singular vector on both sides.
pub fn sigma2(entries: &[f64], n: usize, opts: &Sigma2Options) -> Result<f64, SpectralError> {
    assert_eq!(entries.len(), n * n, "matrix must be n×n");
    if n <= 1 {
        return Ok(0.0);
    }
    if n <= opts.dense_threshold {
        let mut sv = jacobi_singular_values(entries, n);
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv[1])
    } else {
        deflated_power_iteration(entries, n, opts)
    }
}

/// One-sided (Hestenes) Jacobi: orthogonalize the columns of a copy of `A`
/// with plane rotations; the final column norms are the singular values.
pub fn jacobi_singular_values(entries: &[f64], n: usize) -> Vec<f64> {
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| entries[i * n + j]).collect())
        .collect();
    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..n {
                        a += cp[i] * cp[i];
                        b += cq[i] * cq[i];
                        g += cp[i] * cq[i];
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for i in 0..n {
                    let xp = cp[i];
                    let xq = cq[i];
                    cp[i] = c * xp - s * xq;
                    cq[i] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn mat_vec(entries: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..n {
        let row = &entries[i * n..(i + 1) * n];
        out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

fn mat_t_vec(entries: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        let xi = x[i];
        for j in 0..n {
            out[j] += entries[i * n + j] * xi;
        }
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Power iteration on `AᵀA` restricted to the complement of `1`.
pub fn deflated_power_iteration(
    entries: &[f64],
    n: usize,
    opts: &Sigma2Options,
) -> Result<f64, SpectralError> {
    // fixed, non-symmetric start so no eigenvector is missed by construction
    let mut x: Vec<f64> = (0..n)
        .map(|i| ((i + 1) as f64 * 0.754_877_666_2).fract() + 0.1 * i as f64)
        .collect();
    remove_mean(&mut x);
    let nx = norm(&x);
    if nx == 0.0 {
        return Ok(0.0);
    }
    x.iter_mut().for_each(|v| *v /= nx);

    let mut ax = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..opts.max_iters {
        mat_vec(entries, n, &x, &mut ax);
        // Rayleigh quotient of AᵀA at the unit vector x
        let estimate = norm(&ax);
        mat_t_vec(entries, n, &ax, &mut y);
        remove_mean(&mut y);
        let ny = norm(&y);
        if ny <= f64::MIN_POSITIVE || estimate <= 1e-300 {
            return Ok(0.0);
        }
        if (estimate - prev).abs() <= opts.tolerance * estimate {
            return Ok(estimate);
        }
        prev = estimate;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Err(SpectralError::NonConvergence(opts.max_iters))
}
