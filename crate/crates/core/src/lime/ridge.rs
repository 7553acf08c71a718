//! Weighted ridge regression over binary masks via the centered normal
//! equations. The intercept is not penalized.

use serde::{Deserialize, Serialize};

use super::PerturbationSet;
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, norm, Cholesky};
use crate::parallel::{self, Execution};

/// Rows per partial sum. Partials are combined in row order, so results do
/// not depend on the execution mode.
const CHUNK_ROWS: usize = 1024;
/// Bound on the relative residual of the solved normal equations.
const MAX_RELATIVE_RESIDUAL: f64 = 1e-8;

/// Linear surrogate `y ≈ coefficients · z′ + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Weighted coefficient of determination on the training set.
    pub r_squared: f64,
    pub explained_tag: String,
    /// Relative residual `‖A·w − r‖ / ‖r‖` of the solved normal equations.
    pub normal_residual: f64,
    pub num_samples: usize,
    pub rng_seed: u64,
}

impl SurrogateModel {
    pub fn predict(&self, mask: &[bool]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(c, _)| c)
                .sum::<f64>()
    }
}

pub fn fit_ridge(perturbations: &PerturbationSet, lambda: f64) -> Result<SurrogateModel> {
    fit_ridge_with(perturbations, lambda, Execution::default())
}

pub fn fit_ridge_with(
    perturbations: &PerturbationSet,
    lambda: f64,
    execution: Execution,
) -> Result<SurrogateModel> {
    let masks = &perturbations.masks;
    let (n, d) = (masks.rows(), masks.cols());
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg("lambda", format!("{lambda} must be finite and >= 0")));
    }
    if n < d + 1 {
        return Err(Error::arg(
            "samples",
            format!("n = {n} perturbations cannot fit d' = {d} components (need n >= d' + 1)"),
        ));
    }
    let w = &perturbations.weights;
    let y = &perturbations.targets;
    let total_weight: f64 = w.iter().sum();
    if total_weight.is_nan() || total_weight <= 0.0 {
        return Err(Error::arg("weights", "sum of sample weights must be positive"));
    }

    let rows: Vec<usize> = (0..n).step_by(CHUNK_ROWS).collect();
    let chunk_range = |start: usize| start..(start + CHUNK_ROWS).min(n);

    // weighted means
    let partial_means = parallel::map(execution, &rows, |_, &start| {
        let mut zs = vec![0.0; d];
        let mut ys = 0.0;
        for i in chunk_range(start) {
            for (s, &b) in zs.iter_mut().zip(masks.row(i)) {
                if b {
                    *s += w[i];
                }
            }
            ys += w[i] * y[i];
        }
        (zs, ys)
    });
    let mut z_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for (zs, ys) in partial_means {
        z_mean.iter_mut().zip(zs).for_each(|(m, s)| *m += s);
        y_mean += ys;
    }
    z_mean.iter_mut().for_each(|m| *m /= total_weight);
    y_mean /= total_weight;

    // centered cross products, upper triangle
    let partial_moments = parallel::map(execution, &rows, |_, &start| {
        let mut a = vec![0.0; d * d];
        let mut r = vec![0.0; d];
        let mut c = vec![0.0; d];
        for i in chunk_range(start) {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            for ((cj, &b), m) in c.iter_mut().zip(masks.row(i)).zip(&z_mean) {
                *cj = b as u8 as f64 - m;
            }
            let dy = y[i] - y_mean;
            for j in 0..d {
                let wc = wi * c[j];
                r[j] += wc * dy;
                let row = &mut a[j * d..(j + 1) * d];
                for k in j..d {
                    row[k] += wc * c[k];
                }
            }
        }
        (a, r)
    });
    let mut a = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    for (pa, pr) in partial_moments {
        a.iter_mut().zip(pa).for_each(|(x, p)| *x += p);
        rhs.iter_mut().zip(pr).for_each(|(x, p)| *x += p);
    }
    for j in 0..d {
        for k in 0..j {
            a[j * d + k] = a[k * d + j];
        }
        a[j * d + j] += lambda;
    }

    let chol = Cholesky::factor(&a, d, 1e-12).map_err(|pivot| Error::SingularSystem {
        lambda,
        detail: format!(
            "component {pivot} has no variance independent of earlier components \
             across the perturbations"
        ),
    })?;
    let mut coef = chol.solve(&rhs);
    // one step of iterative refinement
    let resid: Vec<f64> = rhs.iter().zip(mat_vec(&a, d, &coef)).map(|(r, ac)| r - ac).collect();
    coef.iter_mut().zip(chol.solve(&resid)).for_each(|(c, dc)| *c += dc);

    let resid: Vec<f64> = rhs.iter().zip(mat_vec(&a, d, &coef)).map(|(r, ac)| r - ac).collect();
    let scale = norm(&rhs).max(norm(&mat_vec(&a, d, &coef)));
    let normal_residual = if scale > 0.0 { norm(&resid) / scale } else { 0.0 };
    if normal_residual > MAX_RELATIVE_RESIDUAL {
        return Err(Error::SingularSystem {
            lambda,
            detail: format!("normal equations solved only to relative residual {normal_residual:.3e}"),
        });
    }

    let intercept = y_mean - coef.iter().zip(&z_mean).map(|(c, m)| c * m).sum::<f64>();
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let fit = intercept
            + coef
                .iter()
                .zip(masks.row(i))
                .filter(|(_, &b)| b)
                .map(|(c, _)| c)
                .sum::<f64>();
        ss_res += w[i] * (y[i] - fit).powi(2);
        ss_tot += w[i] * (y[i] - y_mean).powi(2);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };

    Ok(SurrogateModel {
        coefficients: coef,
        intercept,
        lambda,
        r_squared,
        explained_tag: perturbations.tag.clone(),
        normal_residual,
        num_samples: n,
        rng_seed: perturbations.rng_seed,
    })
}
