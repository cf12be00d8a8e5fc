//! Prior-weighted expected-improvement acquisition.
//!
//! Each proposal first selects one objective's prior uniformly at random,
//! then either maximizes plain EI (with probability epsilon) or EI times the
//! selected prior's density raised to a decaying exponent. Maximization runs
//! over a mixed candidate set (uniform, prior samples, incumbent
//! perturbations) followed by coordinate hill-climbing.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::gp::{log_ei_from_moments, GpModel};
use crate::prior::{Prior, PriorSet};

/// Default candidate pool size per proposal.
pub const DEFAULT_CANDIDATE_BUDGET: usize = 512;
/// Std of the Gaussian perturbations around the incumbent configuration.
const PERTURBATION_SIGMA: f64 = 0.05;
/// Coordinate hill-climbing steps applied to the best candidate.
const REFINE_STEPS: usize = 20;

/// Prior-decay exponent: `exp(-n_bo^2 / n_d)`.
pub fn gamma(n_bo: usize, n_d: usize) -> f64 {
    assert!(n_d >= 1, "dimension count must be positive");
    (-((n_bo * n_bo) as f64) / n_d as f64).exp()
}

/// Slower variant used by the prior-weighted baseline: `exp(-n_bo / n_d)`.
pub fn pibo_gamma(n_bo: usize, n_d: usize) -> f64 {
    assert!(n_d >= 1, "dimension count must be positive");
    (-(n_bo as f64) / n_d as f64).exp()
}

/// How the prior enters a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionMode {
    /// Plain EI; no prior draws, no branch draw.
    Plain,
    /// Draw an objective and a branch coin: plain EI with probability epsilon,
    /// prior-weighted otherwise.
    EpsGreedy,
    /// Draw an objective; always weight by its prior (no branch coin).
    AlwaysPrior,
}

/// Which branch a proposal actually took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcqBranch {
    Plain,
    PriorWeighted { objective: usize },
}

/// The scalarized max-fidelity dataset the surrogate was fitted on.
#[derive(Debug, Clone)]
pub struct AcquisitionContext<'a> {
    pub dataset: &'a [(Vec<f64>, f64)],
    pub incumbent: f64,
    pub n_bo: usize,
    pub epsilon: f64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(dataset: &'a [(Vec<f64>, f64)], n_bo: usize, epsilon: f64) -> Self {
        let incumbent =
            dataset.iter().map(|(_, y)| *y).fold(f64::INFINITY, f64::min);
        AcquisitionContext { dataset, incumbent, n_bo, epsilon }
    }

    fn incumbent_point(&self) -> &'a [f64] {
        let (u, _) = self
            .dataset
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite targets"))
            .expect("non-empty dataset");
        u
    }
}

#[derive(Debug, Clone)]
pub struct Acquired {
    pub point: Vec<f64>,
    pub branch: AcqBranch,
}

/// Candidate score: log EI, plus `gamma * log pdf` when a prior applies.
pub fn score(model: &GpModel, u: &[f64], incumbent: f64, prior: Option<(&Prior, f64)>) -> f64 {
    let (mean, var) = model.posterior(u);
    let mut s = log_ei_from_moments(mean, var, incumbent);
    if let Some((prior, gamma)) = prior {
        s += gamma * prior.log_pdf(u).expect("candidates stay in the cube");
    }
    s
}

/// Proposes the next unit-cube point to evaluate.
pub fn acquire(
    ctx: &AcquisitionContext,
    model: &GpModel,
    priors: Option<&PriorSet>,
    mode: AcquisitionMode,
    gamma: f64,
    candidate_budget: usize,
    rng: &mut ChaCha20Rng,
) -> Acquired {
    let n_d = ctx.incumbent_point().len();
    let branch = match (mode, priors) {
        (AcquisitionMode::Plain, _) => AcqBranch::Plain,
        (_, None) => {
            log::warn!("prior-weighted acquisition requested without priors; using plain EI");
            AcqBranch::Plain
        }
        (AcquisitionMode::EpsGreedy, Some(set)) => {
            let objective = rng.random_range(0..set.len());
            let coin: f64 = rng.random();
            if coin < ctx.epsilon {
                AcqBranch::Plain
            } else {
                AcqBranch::PriorWeighted { objective }
            }
        }
        (AcquisitionMode::AlwaysPrior, Some(set)) => {
            AcqBranch::PriorWeighted { objective: rng.random_range(0..set.len()) }
        }
    };
    let weighting: Option<(&Prior, f64)> = match branch {
        AcqBranch::Plain => None,
        AcqBranch::PriorWeighted { objective } => {
            Some((priors.expect("weighted branch has priors").get(objective).expect("valid index"), gamma))
        }
    };

    let budget = candidate_budget.max(4);
    let n_uniform = budget / 2;
    let n_prior = budget / 4;
    let n_perturb = budget - n_uniform - n_prior;

    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(budget);
    for _ in 0..n_uniform {
        candidates.push((0..n_d).map(|_| rng.random::<f64>()).collect());
    }
    for _ in 0..n_prior {
        match weighting {
            Some((prior, _)) => candidates.push(prior.sample_unit(rng)),
            // No prior in play: this quarter falls back to uniform samples.
            None => candidates.push((0..n_d).map(|_| rng.random::<f64>()).collect()),
        }
    }
    let center = ctx.incumbent_point();
    let noise = Normal::new(0.0, PERTURBATION_SIGMA).expect("positive sigma");
    for _ in 0..n_perturb {
        candidates
            .push(center.iter().map(|&c| (c + noise.sample(rng)).clamp(0.0, 1.0)).collect());
    }

    let mut best_point = candidates[0].clone();
    let mut best_score = score(model, &best_point, ctx.incumbent, weighting);
    for cand in &candidates[1..] {
        let s = score(model, cand, ctx.incumbent, weighting);
        if s > best_score {
            best_score = s;
            best_point = cand.clone();
        }
    }

    // Local refinement: per-dimension moves with a shrinking step.
    let mut step = 0.1;
    for _ in 0..REFINE_STEPS {
        for d in 0..n_d {
            for delta in [step, -step] {
                let mut trial = best_point.clone();
                trial[d] = (trial[d] + delta).clamp(0.0, 1.0);
                let s = score(model, &trial, ctx.incumbent, weighting);
                if s > best_score {
                    best_score = s;
                    best_point = trial;
                }
            }
        }
        step *= 0.7;
    }

    Acquired { point: best_point, branch }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::fit_gp;
    use crate::prior::PriorQuality;
    use crate::seed::rng_from_seed;

    fn toy_model() -> GpModel {
        let data: Vec<(Vec<f64>, f64)> = vec![
            (vec![0.1, 0.2], 0.9),
            (vec![0.4, 0.6], 0.3),
            (vec![0.8, 0.3], 0.6),
            (vec![0.6, 0.9], 0.5),
        ];
        fit_gp(&data).unwrap()
    }

    fn toy_priors() -> PriorSet {
        PriorSet::new(vec![
            Prior::isotropic(vec![0.2, 0.2], 0.25, 0, PriorQuality::Custom).unwrap(),
            Prior::isotropic(vec![0.8, 0.8], 0.25, 1, PriorQuality::Custom).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn gamma_decay_values() {
        assert_eq!(gamma(0, 4), 1.0);
        assert!((gamma(3, 4) - (-2.25f64).exp()).abs() < 1e-12);
        let far = gamma(10, 4);
        assert!((far - (-25.0f64).exp()).abs() < 1e-15);
        assert!(far < 1.4e-11);
        let mut prev = f64::INFINITY;
        for n in 0..20 {
            let g = gamma(n, 4);
            assert!(g < prev || n == 0);
            prev = g;
        }
    }

    #[test]
    fn pibo_gamma_decays_slower() {
        assert!((pibo_gamma(4, 4) - (-1.0f64).exp()).abs() < 1e-12);
        for n_d in [1usize, 2, 4, 8] {
            assert_eq!(pibo_gamma(1, n_d), gamma(1, n_d));
            for n in 2..12 {
                assert!(pibo_gamma(n, n_d) > gamma(n, n_d), "n={n}, d={n_d}");
            }
        }
    }

    #[test]
    fn epsilon_one_never_consults_the_prior() {
        let model = toy_model();
        let data = vec![
            (vec![0.1, 0.2], 0.9),
            (vec![0.4, 0.6], 0.3),
            (vec![0.8, 0.3], 0.6),
            (vec![0.6, 0.9], 0.5),
        ];
        let ctx = AcquisitionContext::new(&data, 0, 1.0);
        let near = toy_priors();
        let far = PriorSet::new(vec![
            Prior::isotropic(vec![0.95, 0.05], 0.05, 0, PriorQuality::Custom).unwrap(),
            Prior::isotropic(vec![0.05, 0.95], 0.05, 1, PriorQuality::Custom).unwrap(),
        ])
        .unwrap();
        let a = acquire(&ctx, &model, Some(&near), AcquisitionMode::EpsGreedy, 1.0, 64, &mut rng_from_seed(5));
        let b = acquire(&ctx, &model, Some(&far), AcquisitionMode::EpsGreedy, 1.0, 64, &mut rng_from_seed(5));
        assert_eq!(a.branch, AcqBranch::Plain);
        assert_eq!(a.point, b.point, "choice independent of the prior set");
    }

    #[test]
    fn zero_gamma_matches_plain_scores_on_fixed_candidates() {
        let model = toy_model();
        let priors = toy_priors();
        let mut rng = rng_from_seed(9);
        let candidates: Vec<Vec<f64>> =
            (0..50).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let argmax = |with_prior: Option<(&Prior, f64)>| {
            candidates
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| {
                    score(&model, a, 0.3, with_prior)
                        .partial_cmp(&score(&model, b, 0.3, with_prior))
                        .unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        };
        let plain = argmax(None);
        let weighted_zero = argmax(Some((priors.get(0).unwrap(), 0.0)));
        assert_eq!(plain, weighted_zero, "x^0 = 1");
    }

    #[test]
    fn scaling_prior_density_keeps_the_argmax() {
        let model = toy_model();
        let priors = toy_priors();
        let prior = priors.get(1).unwrap();
        let mut rng = rng_from_seed(10);
        let candidates: Vec<Vec<f64>> =
            (0..50).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let gamma = 0.6;
        let argmax = |extra: f64| {
            candidates
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| {
                    let sa = score(&model, a, 0.3, Some((prior, gamma))) + gamma * extra;
                    let sb = score(&model, b, 0.3, Some((prior, gamma))) + gamma * extra;
                    sa.partial_cmp(&sb).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        };
        assert_eq!(argmax(0.0), argmax(5.0f64.ln()), "constant factor on the pdf");
    }

    #[test]
    fn missing_priors_fall_back_to_plain(){
        let model = toy_model();
        let data = vec![(vec![0.2, 0.2], 0.4), (vec![0.7, 0.7], 0.8)];
        let ctx = AcquisitionContext::new(&data, 0, 0.25);
        let got = acquire(&ctx, &model, None, AcquisitionMode::EpsGreedy, 1.0, 32, &mut rng_from_seed(2));
        assert_eq!(got.branch, AcqBranch::Plain);
        assert!(got.point.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn epsilon_branch_statistics() {
        let model = toy_model();
        let data = vec![
            (vec![0.1, 0.2], 0.9),
            (vec![0.4, 0.6], 0.3),
            (vec![0.8, 0.3], 0.6),
            (vec![0.6, 0.9], 0.5),
        ];
        let ctx = AcquisitionContext::new(&data, 1, 0.25);
        let priors = toy_priors();
        let mut rng = rng_from_seed(28);
        let mut plain = 0usize;
        let mut per_objective = [0usize; 2];
        let calls = 10_000;
        for _ in 0..calls {
            let got = acquire(&ctx, &model, Some(&priors), AcquisitionMode::EpsGreedy, 0.5, 8, &mut rng);
            match got.branch {
                AcqBranch::Plain => plain += 1,
                AcqBranch::PriorWeighted { objective } => per_objective[objective] += 1,
            }
        }
        assert!((2350..=2650).contains(&plain), "plain branch count {plain}");
        let weighted = per_objective[0] + per_objective[1];
        let p = 0.5;
        let sigma = ((weighted as f64) * p * (1.0 - p)).sqrt();
        let half = weighted as f64 * p;
        for count in per_objective {
            assert!(
                (count as f64 - half).abs() <= 3.0 * sigma,
                "objective selection {count} vs expected {half} (3 sigma {})",
                3.0 * sigma
            );
        }
    }
}
