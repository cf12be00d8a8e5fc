//! Hyperparameter search spaces and the bijection to the unit cube.
//!
//! All surrogate models, priors and samplers operate on normalized
//! coordinates in `[0,1]^{n_d}`. Log-scaled parameters are normalized on
//! base-10 logarithms of their bounds; integer parameters are normalized on
//! the continuous relaxation `[lower - 0.5, upper + 0.5]` and rounded to the
//! nearest integer on the way back.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrimoError, Result};

/// Kind of a hyperparameter dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Continuous,
    Integer,
}

/// One hyperparameter dimension: name, kind, bounds, optional log scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub log_scaled: bool,
}

impl ParamSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64, log_scaled: bool) -> Result<Self> {
        let spec = ParamSpec { name: name.to_string(), kind: ParamKind::Continuous, lower, upper, log_scaled };
        spec.validate()?;
        Ok(spec)
    }

    pub fn integer(name: &str, lower: i64, upper: i64, log_scaled: bool) -> Result<Self> {
        let spec = ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
            log_scaled,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) {
            return Err(PrimoError::domain(format!(
                "parameter '{}': lower bound {} must be < upper bound {}",
                self.name, self.lower, self.upper
            )));
        }
        if self.log_scaled && self.lower <= 0.0 {
            return Err(PrimoError::domain(format!(
                "parameter '{}': log scaling requires a positive lower bound, got {}",
                self.name, self.lower
            )));
        }
        if self.kind == ParamKind::Integer {
            if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 {
                return Err(PrimoError::domain(format!(
                    "parameter '{}': integer bounds must be integer-valued, got [{}, {}]",
                    self.name, self.lower, self.upper
                )));
            }
            // The relaxation [lower - 0.5, upper + 0.5] must stay positive under log.
            if self.log_scaled && self.lower - 0.5 <= 0.0 {
                return Err(PrimoError::domain(format!(
                    "parameter '{}': log-scaled integer needs lower >= 1, got {}",
                    self.name, self.lower
                )));
            }
        }
        Ok(())
    }

    /// Bounds the unit interval maps onto: the integer relaxation when discrete.
    fn relaxed_bounds(&self) -> (f64, f64) {
        match self.kind {
            ParamKind::Continuous => (self.lower, self.upper),
            ParamKind::Integer => (self.lower - 0.5, self.upper + 0.5),
        }
    }

    /// Raw value -> unit coordinate. Errors when the value is out of bounds.
    pub fn to_unit(&self, value: f64) -> Result<f64> {
        if !(value >= self.lower && value <= self.upper) {
            return Err(PrimoError::domain(format!(
                "parameter '{}': value {} outside bounds [{}, {}]",
                self.name, value, self.lower, self.upper
            )));
        }
        let (lo, hi) = self.relaxed_bounds();
        let u = if self.log_scaled {
            (value.log10() - lo.log10()) / (hi.log10() - lo.log10())
        } else {
            (value - lo) / (hi - lo)
        };
        Ok(u.clamp(0.0, 1.0))
    }

    /// Unit coordinate -> raw value; integer dims round to the nearest integer
    /// and clamp back into the declared bounds.
    pub fn from_unit(&self, u: f64) -> f64 {
        let (lo, hi) = self.relaxed_bounds();
        let raw = if self.log_scaled {
            let l = lo.log10();
            10f64.powf(l + u * (hi.log10() - l))
        } else {
            lo + u * (hi - lo)
        };
        match self.kind {
            ParamKind::Continuous => raw.clamp(self.lower, self.upper),
            ParamKind::Integer => raw.round().clamp(self.lower, self.upper),
        }
    }
}

/// The fidelity axis (e.g. training epochs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelitySpec {
    pub name: String,
    pub min: u32,
    pub max: u32,
}

impl FidelitySpec {
    pub fn new(name: &str, min: u32, max: u32) -> Result<Self> {
        if min < 1 || min >= max {
            return Err(PrimoError::domain(format!(
                "fidelity '{}': need 1 <= min < max, got [{}, {}]",
                name, min, max
            )));
        }
        Ok(FidelitySpec { name: name.to_string(), min, max })
    }
}

/// An ordered set of hyperparameter dimensions plus one fidelity axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
    fidelity: FidelitySpec,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>, fidelity: FidelitySpec) -> Result<Self> {
        if params.is_empty() {
            return Err(PrimoError::domain("search space needs at least one parameter"));
        }
        for p in &params {
            p.validate()?;
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(PrimoError::domain(format!("duplicate parameter name '{}'", p.name)));
            }
        }
        Ok(SearchSpace { params, fidelity })
    }

    /// Number of non-fidelity dimensions.
    pub fn n_d(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn fidelity(&self) -> &FidelitySpec {
        &self.fidelity
    }

    pub fn z_min(&self) -> u32 {
        self.fidelity.min
    }

    pub fn z_max(&self) -> u32 {
        self.fidelity.max
    }

    /// Raw values (in parameter order) -> unit vector.
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.check_len(raw.len())?;
        self.params.iter().zip(raw).map(|(p, &v)| p.to_unit(v)).collect()
    }

    /// Unit vector -> full configuration (raw values rounded/clamped per dim).
    pub fn denormalize(&self, unit: &[f64]) -> Result<Configuration> {
        self.check_len(unit.len())?;
        for (p, &u) in self.params.iter().zip(unit) {
            if !(0.0..=1.0).contains(&u) {
                return Err(PrimoError::domain(format!(
                    "parameter '{}': unit coordinate {} outside [0,1]",
                    p.name, u
                )));
            }
        }
        let raw: Vec<f64> = self.params.iter().zip(unit).map(|(p, &u)| p.from_unit(u)).collect();
        // Re-normalize so integer dims carry the unit coordinate of their rounded value.
        let unit = self.normalize(&raw)?;
        Ok(Configuration { raw, unit })
    }

    /// Builds a configuration from raw values, validating bounds.
    pub fn configuration(&self, raw: Vec<f64>) -> Result<Configuration> {
        let unit = self.normalize(&raw)?;
        Ok(Configuration { raw, unit })
    }

    /// Uniform sample in normalized space (log-uniform in raw space for log dims).
    pub fn sample_uniform(&self, rng: &mut ChaCha20Rng) -> Configuration {
        let unit: Vec<f64> = (0..self.n_d()).map(|_| rng.random::<f64>()).collect();
        self.denormalize(&unit).expect("uniform unit sample is always in the cube")
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_d() {
            return Err(PrimoError::domain(format!(
                "dimension mismatch: space has {} parameters, got {} values",
                self.n_d(),
                len
            )));
        }
        Ok(())
    }

    /// Parses the TOML search-space document (see `docs/formats.md`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpaceFile =
            toml::from_str(text).map_err(|e| PrimoError::parse(format!("search space: {e}")))?;
        let fidelity = FidelitySpec::new(&file.fidelity.name, file.fidelity.min, file.fidelity.max)?;
        SearchSpace::new(file.param, fidelity)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SpaceFile {
            param: self.params.clone(),
            fidelity: self.fidelity.clone(),
        };
        toml::to_string(&file).expect("search space serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    param: Vec<ParamSpec>,
    fidelity: FidelitySpec,
}

/// A point in the search space, carried in both raw and normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    raw: Vec<f64>,
    unit: Vec<f64>,
}

impl Configuration {
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn unit(&self) -> &[f64] {
        &self.unit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn lcbench_like() -> SearchSpace {
        SearchSpace::new(
            vec![
                ParamSpec::continuous("learning_rate", 1e-4, 0.1, true).unwrap(),
                ParamSpec::integer("num_layers", 1, 5, false).unwrap(),
            ],
            FidelitySpec::new("epoch", 1, 52).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_log_bounds_and_midpoint() {
        let space = lcbench_like();
        let u = space.normalize(&[1e-4, 1.0]).unwrap();
        assert!(u[0].abs() < 1e-12, "lower bound maps to 0, got {}", u[0]);

        // log midpoint: (log10 v - log10 1e-4) / (log10 0.1 - log10 1e-4) = 0.5
        let v = 10f64.powf(-2.5);
        let u = space.normalize(&[v, 1.0]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12, "log midpoint, got {}", u[0]);
    }

    #[test]
    fn normalize_integer_relaxation() {
        let space = lcbench_like();
        // (3 - 0.5) / 5 on the relaxation [0.5, 5.5]
        let u = space.normalize(&[1e-3, 3.0]).unwrap();
        assert!((u[1] - 0.5).abs() < 1e-12, "integer midpoint, got {}", u[1]);
    }

    #[test]
    fn denormalize_inverts() {
        let space = lcbench_like();
        let cfg = space.denormalize(&[0.0, 0.0]).unwrap();
        assert_eq!(cfg.raw(), &[1e-4, 1.0]);

        let cfg = space.denormalize(&[0.5, 0.0]).unwrap();
        assert!((cfg.raw()[0] - 10f64.powf(-2.5)).abs() < 1e-12);
        assert!((cfg.raw()[0] - 0.0031623).abs() < 1e-6);

        // round(0.5 + 0.49 * 5) = 3
        let cfg = space.denormalize(&[0.0, 0.49]).unwrap();
        assert_eq!(cfg.raw()[1], 3.0);
    }

    #[test]
    fn round_trip_continuous_dims() {
        let space = lcbench_like();
        let mut rng = rng_from_seed(11);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
            let cfg = space.denormalize(&u).unwrap();
            let back = space.normalize(cfg.raw()).unwrap();
            assert!((back[0] - u[0]).abs() <= 1e-12, "continuous round trip");
            // integer dims: idempotent after one rounding
            let cfg2 = space.denormalize(&back).unwrap();
            assert_eq!(cfg.raw(), cfg2.raw());
        }
    }

    #[test]
    fn normalize_is_strictly_monotone() {
        let space = lcbench_like();
        let mut prev = -1.0;
        for i in 0..100 {
            let v = 1e-4 * 1000f64.powf(i as f64 / 99.0);
            let u = space.normalize(&[v, 2.0]).unwrap()[0];
            assert!(u > prev, "monotone in raw value");
            prev = u;
        }
    }

    #[test]
    fn uniform_sampling_statistics() {
        let space = lcbench_like();
        let mut rng = rng_from_seed(5);
        let mut sum = 0.0;
        let (mut lo, mut hi) = (1.0f64, 0.0f64);
        let n = 100_000;
        for _ in 0..n {
            let cfg = space.sample_uniform(&mut rng);
            assert!(cfg.raw()[0] >= 1e-4 && cfg.raw()[0] <= 0.1);
            assert!(cfg.raw()[1] >= 1.0 && cfg.raw()[1] <= 5.0);
            let u = cfg.unit()[0];
            sum += u;
            lo = lo.min(u);
            hi = hi.max(u);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean of normalized samples, got {mean}");
        assert!(lo < 1e-3 && hi > 1.0 - 1e-3, "bounds covered: [{lo}, {hi}]");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let space = lcbench_like();
        let a = space.sample_uniform(&mut rng_from_seed(99));
        let b = space.sample_uniform(&mut rng_from_seed(99));
        assert_eq!(a.raw(), b.raw());
    }

    #[test]
    fn out_of_bounds_names_the_parameter() {
        let space = lcbench_like();
        let err = space.normalize(&[0.5, 3.0]).unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_domain_error() {
        let space = lcbench_like();
        assert!(space.denormalize(&[0.5]).is_err());
        assert!(space.normalize(&[0.01]).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(ParamSpec::continuous("x", 1.0, 1.0, false).is_err());
        assert!(ParamSpec::continuous("x", -1.0, 1.0, true).is_err());
        assert!(ParamSpec::integer("x", 1, 5, true).is_ok());
        assert!(FidelitySpec::new("epoch", 0, 5).is_err());
        assert!(FidelitySpec::new("epoch", 5, 5).is_err());
        let dup = SearchSpace::new(
            vec![
                ParamSpec::continuous("x", 0.0, 1.0, false).unwrap(),
                ParamSpec::continuous("x", 0.0, 2.0, false).unwrap(),
            ],
            FidelitySpec::new("epoch", 1, 2).unwrap(),
        );
        assert!(dup.is_err());
    }

    #[test]
    fn toml_round_trip() {
        let space = lcbench_like();
        let text = space.to_toml_string();
        let parsed = SearchSpace::from_toml_str(&text).unwrap();
        assert_eq!(parsed.n_d(), 2);
        assert_eq!(parsed.param_names(), space.param_names());
        assert_eq!(parsed.z_max(), 52);

        assert!(SearchSpace::from_toml_str("this is not a space").is_err());
    }
}
