//! Standard-normal helpers shared by the priors and the surrogate.

/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn log_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI.ln() - 0.5 * z * z
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}
