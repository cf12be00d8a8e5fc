//! Gaussian-process surrogate over scalarized objectives.
//!
//! Matern-5/2 kernel with per-dimension lengthscales on unit-cube inputs,
//! targets standardized to zero mean and unit variance. Hyperparameters are
//! set by maximizing the log marginal likelihood with a multi-start,
//! derivative-free coordinate search, deterministic under a fixed internal
//! seed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{PrimoError, Result};
use crate::seed::rng_from_seed;
use crate::stats::{log_normal_pdf, normal_cdf, normal_pdf};

/// Lengthscale bounds, in raw (non-log) units.
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
/// Predictive variance floor.
pub const VARIANCE_FLOOR: f64 = 1e-12;

const MULTI_STARTS: usize = 8;
const FIT_SEED: u64 = 0x6d61_7465_726e;
const MAX_JITTER: f64 = 1e-4;

/// A fitted Gaussian process.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_sd: f64,
    lengthscales: Vec<f64>,
    signal_variance: f64,
    noise_variance: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

/// Fits kernel hyperparameters by maximum marginal likelihood.
///
/// Needs at least two observations; inputs must lie in the unit cube.
pub fn fit_gp(dataset: &[(Vec<f64>, f64)]) -> Result<GpModel> {
    let (x, y_raw) = split_dataset(dataset)?;
    let dims = x[0].len();
    let n = x.len();

    let y_mean = y_raw.iter().sum::<f64>() / n as f64;
    let var = y_raw.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
    let y_sd = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let y_std: Vec<f64> = y_raw.iter().map(|y| (y - y_mean) / y_sd).collect();

    // theta = [log10 lengthscales.., log10 signal_variance, log10 noise_variance]
    let lo: Vec<f64> = (0..dims).map(|_| -3.0).chain([-6.0, -8.0]).collect();
    let hi: Vec<f64> = (0..dims).map(|_| 3.0).chain([2.0, 0.0]).collect();

    let mut rng = rng_from_seed(FIT_SEED);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..MULTI_STARTS {
        let mut theta: Vec<f64> = if start == 0 {
            (0..dims).map(|_| -0.3).chain([0.0, -4.0]).collect()
        } else {
            let mut t: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.5..0.7)).collect();
            t.push(rng.random_range(-0.5..0.5));
            t.push(rng.random_range(-6.0..-1.0));
            t
        };
        let mut cur = log_marginal(&x, &y_std, &theta).unwrap_or(f64::NEG_INFINITY);
        let mut step = 0.4;
        for _sweep in 0..60 {
            let mut improved = false;
            for i in 0..theta.len() {
                let base = theta[i];
                let mut best_local = (cur, base);
                for candidate in [base + step, base - step] {
                    let clamped = candidate.clamp(lo[i], hi[i]);
                    if clamped == base {
                        continue;
                    }
                    theta[i] = clamped;
                    let lml = log_marginal(&x, &y_std, &theta).unwrap_or(f64::NEG_INFINITY);
                    if lml > best_local.0 + 1e-10 {
                        best_local = (lml, clamped);
                    }
                }
                theta[i] = best_local.1;
                if best_local.0 > cur {
                    cur = best_local.0;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
                if step < 1e-3 {
                    break;
                }
            }
        }
        if best.as_ref().map_or(true, |(b, _)| cur > *b) {
            best = Some((cur, theta));
        }
    }
    let (_, theta) = best.expect("at least one start");
    let lengthscales: Vec<f64> = theta[..dims].iter().map(|t| 10f64.powf(*t)).collect();
    let signal_variance = 10f64.powf(theta[dims]);
    let noise_variance = 10f64.powf(theta[dims + 1]);
    GpModel::assemble(x, y_mean, y_sd, y_std, lengthscales, signal_variance, noise_variance)
}

impl GpModel {
    /// Builds a model with fixed hyperparameters (no marginal-likelihood fit).
    pub fn with_hyperparameters(
        dataset: &[(Vec<f64>, f64)],
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let (x, y_raw) = split_dataset(dataset)?;
        if lengthscales.len() != x[0].len() {
            return Err(PrimoError::domain("one lengthscale per input dimension required"));
        }
        if lengthscales.iter().any(|l| !(*l >= LENGTHSCALE_BOUNDS.0 && *l <= LENGTHSCALE_BOUNDS.1)) {
            return Err(PrimoError::domain(format!(
                "lengthscales must lie in [{}, {}]",
                LENGTHSCALE_BOUNDS.0, LENGTHSCALE_BOUNDS.1
            )));
        }
        let n = x.len();
        let y_mean = y_raw.iter().sum::<f64>() / n as f64;
        let var = y_raw.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_sd = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        let y_std: Vec<f64> = y_raw.iter().map(|y| (y - y_mean) / y_sd).collect();
        GpModel::assemble(x, y_mean, y_sd, y_std, lengthscales, signal_variance, noise_variance)
    }

    fn assemble(
        x: Vec<Vec<f64>>,
        y_mean: f64,
        y_sd: f64,
        y_std: Vec<f64>,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let k = kernel_matrix(&x, &lengthscales, signal_variance, noise_variance);
        let (chol, _) = factorize_with_jitter(k)?;
        let y = DVector::from_vec(y_std);
        let alpha = chol.solve(&y);
        Ok(GpModel { x, y_mean, y_sd, lengthscales, signal_variance, noise_variance, chol, alpha })
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    /// Signal variance expressed in raw target units.
    pub fn signal_variance(&self) -> f64 {
        self.signal_variance * self.y_sd * self.y_sd
    }

    /// Noise variance expressed in raw target units.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance * self.y_sd * self.y_sd
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Predictive mean and variance at a unit-cube point, in raw target units.
    pub fn posterior(&self, u: &[f64]) -> (f64, f64) {
        let k_star = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| matern52(xi, u, &self.lengthscales, self.signal_variance)),
        );
        let mean_std = k_star.dot(&self.alpha);
        let w = self.chol.solve(&k_star);
        let var_std = self.signal_variance - k_star.dot(&w);
        let mean = self.y_mean + self.y_sd * mean_std;
        let var = (self.y_sd * self.y_sd * var_std).max(VARIANCE_FLOOR);
        (mean, var)
    }
}

fn split_dataset(dataset: &[(Vec<f64>, f64)]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if dataset.len() < 2 {
        return Err(PrimoError::domain(format!(
            "GP fit needs at least 2 observations, got {}",
            dataset.len()
        )));
    }
    let dims = dataset[0].0.len();
    for (u, y) in dataset {
        if u.len() != dims {
            return Err(PrimoError::domain("inconsistent input dimensions in GP dataset"));
        }
        if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(PrimoError::domain(format!("GP inputs must lie in the unit cube: {u:?}")));
        }
        if !y.is_finite() {
            return Err(PrimoError::domain("GP targets must be finite"));
        }
    }
    Ok((dataset.iter().map(|(u, _)| u.clone()).collect(), dataset.iter().map(|(_, y)| *y).collect()))
}

fn matern52(a: &[f64], b: &[f64], lengthscales: &[f64], signal_variance: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum();
    let r = r2.sqrt();
    let s5r = 5f64.sqrt() * r;
    signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * (-s5r).exp()
}

fn kernel_matrix(x: &[Vec<f64>], lengthscales: &[f64], signal_variance: f64, noise_variance: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = matern52(&x[i], &x[j], lengthscales, signal_variance);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += noise_variance;
    }
    k
}

/// Cholesky with jitter escalation up to `MAX_JITTER`.
fn factorize_with_jitter(k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(chol) = k.clone().cholesky() {
        return Ok((chol, 0.0));
    }
    let mut jitter = 1e-10;
    while jitter <= MAX_JITTER {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = kj.cholesky() {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(PrimoError::Numeric(format!(
        "kernel matrix not positive definite after jitter {MAX_JITTER}"
    )))
}

fn log_marginal(x: &[Vec<f64>], y_std: &[f64], theta: &[f64]) -> Option<f64> {
    let dims = x[0].len();
    let lengthscales: Vec<f64> = theta[..dims].iter().map(|t| 10f64.powf(*t)).collect();
    let signal = 10f64.powf(theta[dims]);
    let noise = 10f64.powf(theta[dims + 1]);
    let k = kernel_matrix(x, &lengthscales, signal, noise);
    let (chol, _) = factorize_with_jitter(k).ok()?;
    let y = DVector::from_column_slice(y_std);
    let alpha = chol.solve(&y);
    let log_det_half: f64 = (0..x.len()).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
    let n = x.len() as f64;
    Some(-0.5 * y.dot(&alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

/// Expected improvement below `incumbent` at point `u`. Always non-negative.
pub fn ei(model: &GpModel, u: &[f64], incumbent: f64) -> f64 {
    let (mean, var) = model.posterior(u);
    ei_from_moments(mean, var, incumbent)
}

/// Log of expected improvement, stable far into the no-improvement tail.
pub fn log_ei(model: &GpModel, u: &[f64], incumbent: f64) -> f64 {
    let (mean, var) = model.posterior(u);
    log_ei_from_moments(mean, var, incumbent)
}

pub fn ei_from_moments(mean: f64, variance: f64, incumbent: f64) -> f64 {
    log_ei_from_moments(mean, variance, incumbent).exp()
}

pub fn log_ei_from_moments(mean: f64, variance: f64, incumbent: f64) -> f64 {
    let sd = variance.max(0.0).sqrt();
    if sd < 1e-9 {
        let improvement = incumbent - mean;
        return if improvement > 0.0 { improvement.ln() } else { f64::NEG_INFINITY };
    }
    let z = (incumbent - mean) / sd;
    sd.ln() + log_h(z)
}

/// log(phi(z) + z * Phi(z)); asymptotic expansion once the direct form
/// underflows. The direct difference stays accurate down to z ~ -30 because
/// both terms are computed to full absolute precision.
fn log_h(z: f64) -> f64 {
    if z > -30.0 {
        let h = normal_pdf(z) + z * normal_cdf(z);
        if h > 0.0 {
            h.ln()
        } else {
            f64::NEG_INFINITY
        }
    } else {
        let z2 = z * z;
        log_normal_pdf(z) - z2.ln() + (1.0 - 3.0 / z2 + 15.0 / (z2 * z2)).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_dataset() -> Vec<(Vec<f64>, f64)> {
        (0..5).map(|i| (vec![i as f64 / 4.0], i as f64 / 4.0)).collect()
    }

    #[test]
    fn interpolates_noiseless_line() {
        let data = line_dataset();
        let model = fit_gp(&data).unwrap();
        for (u, y) in &data {
            let (mean, _) = model.posterior(u);
            assert!((mean - y).abs() < 1e-3, "at {u:?}: mean {mean} vs target {y}");
        }
    }

    #[test]
    fn constant_targets_give_flat_posterior() {
        let data: Vec<(Vec<f64>, f64)> = (0..4).map(|i| (vec![i as f64 / 3.0], 2.5)).collect();
        let model = fit_gp(&data).unwrap();
        let (m0, _) = model.posterior(&[0.1]);
        let (m1, v1) = model.posterior(&[0.9]);
        assert!((m0 - 2.5).abs() < 1e-6);
        assert!((m1 - 2.5).abs() < 1e-6);
        assert!(v1 >= 0.0);
    }

    #[test]
    fn fit_is_deterministic() {
        let data = line_dataset();
        let a = fit_gp(&data).unwrap();
        let b = fit_gp(&data).unwrap();
        assert_eq!(a.lengthscales(), b.lengthscales());
        assert_eq!(a.signal_variance(), b.signal_variance());
        assert_eq!(a.noise_variance(), b.noise_variance());
    }

    #[test]
    fn rejects_degenerate_datasets() {
        assert!(fit_gp(&[]).is_err());
        assert!(fit_gp(&[(vec![0.5], 1.0)]).is_err());
        assert!(fit_gp(&[(vec![0.5], 1.0), (vec![1.5], 2.0)]).is_err(), "outside cube");
        assert!(fit_gp(&[(vec![0.5], 1.0), (vec![0.2, 0.3], 2.0)]).is_err(), "ragged dims");
    }

    #[test]
    fn posterior_variance_shrinks_at_training_points() {
        let data = line_dataset();
        let model =
            GpModel::with_hyperparameters(&data, vec![0.3], 1.0, 1e-8).unwrap();
        for (u, _) in &data {
            let (_, var) = model.posterior(u);
            assert!(var <= model.noise_variance() + 1e-6, "var {var} at training point");
        }
    }

    #[test]
    fn posterior_variance_far_from_data_approaches_signal() {
        // Data clustered at one corner, short lengthscale.
        let data: Vec<(Vec<f64>, f64)> =
            (0..5).map(|i| (vec![0.02 * i as f64], (i as f64).sin())).collect();
        let model = GpModel::with_hyperparameters(&data, vec![0.05], 1.3, 1e-6).unwrap();
        let (_, var) = model.posterior(&[1.0]);
        let signal = model.signal_variance();
        assert!((var - signal).abs() / signal < 0.05, "var {var} vs signal {signal}");
    }

    #[test]
    fn posterior_mean_is_continuous() {
        let data = line_dataset();
        let model = fit_gp(&data).unwrap();
        let (m0, _) = model.posterior(&[0.61]);
        let mut prev_gap = f64::INFINITY;
        for k in 1..=5 {
            let delta = 0.1f64.powi(k);
            let (m, _) = model.posterior(&[0.61 + delta]);
            let gap = (m - m0).abs();
            assert!(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-4);
    }

    #[test]
    fn ei_spot_values() {
        assert_eq!(ei_from_moments(1.0, 0.0, 1.0), 0.0);
        assert!((ei_from_moments(0.75, 0.0, 1.0) - 0.25).abs() < 1e-12);
        let at_mean = ei_from_moments(1.0, 1.0, 1.0);
        assert!((at_mean - normal_pdf(0.0)).abs() < 1e-6, "phi(0), got {at_mean}");
    }

    #[test]
    fn ei_nonnegative_and_monotone_in_mean() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let mean = -4.0 + i as f64 * 0.25;
            let v = ei_from_moments(mean, 0.49, 0.0);
            assert!(v >= 0.0);
            assert!(v.is_finite());
            assert!(v <= prev + 1e-12, "EI decreasing as the mean worsens");
            prev = v;
        }
        // Deep tail stays finite in log form and ordered.
        let a = log_ei_from_moments(30.0, 1.0, 0.0);
        let b = log_ei_from_moments(40.0, 1.0, 0.0);
        assert!(a.is_finite() && b.is_finite());
        assert!(b < a);
    }

    #[test]
    fn log_h_asymptotic_joins_direct_branch() {
        // Compare the two branches near the switch point.
        for z in [-29.9_f64, -29.0] {
            let direct = (normal_pdf(z) + z * normal_cdf(z)).ln();
            let z2: f64 = z * z;
            let asym = log_normal_pdf(z) - z2.ln() + (1.0 - 3.0 / z2 + 15.0 / (z2 * z2)).ln();
            assert!((direct - asym).abs() < 1e-6, "z {z}: {direct} vs {asym}");
        }
    }
}
