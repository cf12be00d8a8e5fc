//! Expert beliefs over the location of each objective's optimum.
//!
//! A prior is a product of per-dimension truncated normals on the unit cube,
//! so its PDF is a proper density there and never vanishes. Means live in
//! normalized space internally; the on-disk format stores them on the raw
//! parameter scale.

use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bench::Benchmark;
use crate::error::{PrimoError, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::space::{Configuration, SearchSpace};
use crate::stats::{log_normal_pdf, normal_cdf};

/// Default belief width in normalized coordinates.
pub const DEFAULT_PRIOR_SIGMA: f64 = 0.25;
/// Perturbation applied to the best sampled configuration of a good prior.
pub const GOOD_PRIOR_PERTURBATION_SIGMA: f64 = 0.01;
/// Sample count of the offline prior-construction pass.
pub const PRIOR_CONSTRUCTION_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorQuality {
    Good,
    Bad,
    Custom,
}

impl std::fmt::Display for PriorQuality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriorQuality::Good => write!(f, "good"),
            PriorQuality::Bad => write!(f, "bad"),
            PriorQuality::Custom => write!(f, "custom"),
        }
    }
}

impl std::str::FromStr for PriorQuality {
    type Err = PrimoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" => Ok(PriorQuality::Good),
            "bad" => Ok(PriorQuality::Bad),
            "custom" => Ok(PriorQuality::Custom),
            other => Err(PrimoError::parse(format!("unknown prior quality '{other}'"))),
        }
    }
}

/// Belief over one objective's optimum location.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    mean: Vec<f64>,
    sigma: Vec<f64>,
    objective_index: usize,
    quality: PriorQuality,
}

impl Prior {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>, objective_index: usize, quality: PriorQuality) -> Result<Self> {
        if mean.is_empty() || mean.len() != sigma.len() {
            return Err(PrimoError::domain(format!(
                "prior needs matching non-empty mean/sigma, got {} and {}",
                mean.len(),
                sigma.len()
            )));
        }
        if mean.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(PrimoError::domain(format!("prior mean must lie in the unit cube: {mean:?}")));
        }
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(PrimoError::domain(format!("prior sigma must be positive: {sigma:?}")));
        }
        Ok(Prior { mean, sigma, objective_index, quality })
    }

    /// Same sigma in every dimension.
    pub fn isotropic(mean: Vec<f64>, sigma: f64, objective_index: usize, quality: PriorQuality) -> Result<Self> {
        let n = mean.len();
        Prior::new(mean, vec![sigma; n], objective_index, quality)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn objective_index(&self) -> usize {
        self.objective_index
    }

    pub fn quality(&self) -> PriorQuality {
        self.quality
    }

    pub fn n_d(&self) -> usize {
        self.mean.len()
    }

    /// Product of per-dimension truncated-normal densities on [0,1].
    pub fn pdf(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(u)?.exp())
    }

    pub fn log_pdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.mean.len() {
            return Err(PrimoError::domain(format!(
                "prior has {} dimensions, point has {}",
                self.mean.len(),
                u.len()
            )));
        }
        if u.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(PrimoError::domain(format!("point outside the unit cube: {u:?}")));
        }
        let mut log_density = 0.0;
        for ((&x, &m), &s) in u.iter().zip(&self.mean).zip(&self.sigma) {
            let z = (x - m) / s;
            let mass = normal_cdf((1.0 - m) / s) - normal_cdf((0.0 - m) / s);
            log_density += log_normal_pdf(z) - s.ln() - mass.ln();
        }
        Ok(log_density)
    }

    /// Per-dimension truncated-normal draw in normalized space.
    pub fn sample_unit(&self, rng: &mut ChaCha20Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sigma)
            .map(|(&m, &s)| {
                let dist = Normal::new(m, s).expect("positive sigma");
                // Rejection from the untruncated normal; terminates with probability 1.
                loop {
                    let x: f64 = dist.sample(rng);
                    if (0.0..=1.0).contains(&x) {
                        return x;
                    }
                }
            })
            .collect()
    }

    /// Draws a full configuration (denormalized, integer dims rounded).
    pub fn sample(&self, space: &SearchSpace, rng: &mut ChaCha20Rng) -> Result<Configuration> {
        let u = self.sample_unit(rng);
        space.denormalize(&u)
    }

    /// Serializes to the prior file format: means on the raw parameter scale,
    /// sigmas in normalized units.
    pub fn to_toml_string(&self, space: &SearchSpace) -> Result<String> {
        if space.n_d() != self.n_d() {
            return Err(PrimoError::domain("prior/space dimension mismatch"));
        }
        let mean_cfg = space.denormalize(&self.mean)?;
        let file = PriorFile {
            objective_index: self.objective_index,
            quality: self.quality,
            dimension: space
                .params()
                .iter()
                .zip(mean_cfg.raw())
                .zip(&self.sigma)
                .map(|((p, &raw), &s)| PriorDim { name: p.name.clone(), mean: raw, sigma: s })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| PrimoError::parse(format!("prior serialization: {e}")))
    }

    pub fn from_toml_str(text: &str, space: &SearchSpace) -> Result<Self> {
        let file: PriorFile =
            toml::from_str(text).map_err(|e| PrimoError::parse(format!("prior file: {e}")))?;
        if file.dimension.len() != space.n_d() {
            return Err(PrimoError::parse(format!(
                "prior file has {} dimensions, space has {}",
                file.dimension.len(),
                space.n_d()
            )));
        }
        let mut raw = Vec::with_capacity(space.n_d());
        let mut sigma = Vec::with_capacity(space.n_d());
        for (p, dim) in space.params().iter().zip(&file.dimension) {
            if p.name != dim.name {
                return Err(PrimoError::parse(format!(
                    "prior dimension '{}' does not match parameter '{}'",
                    dim.name, p.name
                )));
            }
            raw.push(dim.mean);
            sigma.push(dim.sigma);
        }
        let mean = space.normalize(&raw)?;
        Prior::new(mean, sigma, file.objective_index, file.quality)
    }
}

#[derive(Serialize, Deserialize)]
struct PriorFile {
    objective_index: usize,
    quality: PriorQuality,
    dimension: Vec<PriorDim>,
}

#[derive(Serialize, Deserialize)]
struct PriorDim {
    name: String,
    mean: f64,
    sigma: f64,
}

/// One prior per objective, ordered by objective index.
#[derive(Debug, Clone)]
pub struct PriorSet {
    priors: Vec<Prior>,
}

impl PriorSet {
    pub fn new(priors: Vec<Prior>) -> Result<Self> {
        if priors.is_empty() {
            return Err(PrimoError::domain("prior set must cover at least one objective"));
        }
        for (i, p) in priors.iter().enumerate() {
            if p.objective_index() != i {
                return Err(PrimoError::domain(format!(
                    "prior set must be ordered by objective index: slot {} holds index {}",
                    i,
                    p.objective_index()
                )));
            }
        }
        Ok(PriorSet { priors })
    }

    pub fn priors(&self) -> &[Prior] {
        &self.priors
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    pub fn get(&self, objective: usize) -> Option<&Prior> {
        self.priors.get(objective)
    }
}

/// Builds a good or bad prior for one objective by the offline protocol:
/// sample 100,000 configurations uniformly under a fixed global seed, evaluate
/// all of them at maximum fidelity, and center the prior on the best (good,
/// perturbed by N(0, 0.01^2) per dimension) or worst (bad, unperturbed)
/// configuration. The returned prior always has sigma 0.25.
///
/// The same global seed reproduces the same sample set for every objective
/// and quality, and these evaluations are charged to no optimizer budget.
pub fn construct_prior(
    bench: &dyn Benchmark,
    objective_index: usize,
    quality: PriorQuality,
    global_seed: u64,
) -> Result<Prior> {
    if objective_index >= bench.n_objectives() {
        return Err(PrimoError::domain(format!(
            "benchmark '{}' has {} objectives, requested index {}",
            bench.name(),
            bench.n_objectives(),
            objective_index
        )));
    }
    let space = bench.space();
    let z_max = space.z_max();
    let mut rng = rng_from_seed(derive_seed(&["prior-pool", bench.name(), &global_seed.to_string()]));

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut worst: Option<(f64, usize, Vec<f64>)> = None;
    for i in 0..PRIOR_CONSTRUCTION_SAMPLES {
        let cfg = space.sample_uniform(&mut rng);
        let y = bench.evaluate(&cfg, z_max)?;
        let v = y.values()[objective_index];
        // Strict comparisons keep the ranking stable: ties resolve to the
        // earliest sampled configuration.
        if best.as_ref().map_or(true, |(bv, _, _)| v < *bv) {
            best = Some((v, i, cfg.unit().to_vec()));
        }
        if worst.as_ref().map_or(true, |(wv, _, _)| v > *wv) {
            worst = Some((v, i, cfg.unit().to_vec()));
        }
    }
    let (_, _, best_u) = best.expect("non-zero sample count");
    let (_, _, worst_u) = worst.expect("non-zero sample count");

    let mean = match quality {
        PriorQuality::Good => {
            let mut perturb_rng = rng_from_seed(derive_seed(&[
                "prior-perturb",
                bench.name(),
                &objective_index.to_string(),
                &global_seed.to_string(),
            ]));
            let noise = Normal::new(0.0, GOOD_PRIOR_PERTURBATION_SIGMA).expect("positive sigma");
            best_u
                .iter()
                .map(|&u| (u + noise.sample(&mut perturb_rng)).clamp(0.0, 1.0))
                .collect()
        }
        PriorQuality::Bad => worst_u,
        PriorQuality::Custom => {
            return Err(PrimoError::domain("custom priors are user-supplied, not constructed"))
        }
    };
    Prior::isotropic(mean, DEFAULT_PRIOR_SIGMA, objective_index, quality)
}

/// The best configuration of the construction pool, before perturbation.
/// Exposed for verifying that a good prior is centered on the exact rank-1
/// sample.
pub fn construction_optimum(
    bench: &dyn Benchmark,
    objective_index: usize,
    global_seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let space = bench.space();
    let z_max = space.z_max();
    let mut rng = rng_from_seed(derive_seed(&["prior-pool", bench.name(), &global_seed.to_string()]));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..PRIOR_CONSTRUCTION_SAMPLES {
        let cfg = space.sample_uniform(&mut rng);
        let y = bench.evaluate(&cfg, z_max)?;
        let v = y.values()[objective_index];
        if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
            best = Some((v, cfg.unit().to_vec()));
        }
    }
    let (v, u) = best.expect("non-zero sample count");
    Ok((u, v))
}
