//! Baseline optimizers sharing the run drivers: random search (optionally
//! prior-based), the successive-halving scheduler with uniform / prior-mixed
//! / model-guided samplers, scalarized BO with random weights, and its
//! always-prior-weighted variant with the slower linear decay.

use crate::bench::Benchmark;
use crate::error::Result;
use crate::prior::PriorSet;

use super::driver::{
    run_bo_driver, run_moasha_driver, run_rs_driver, AcqKind, BoDriver, DecayKind, InitKind,
    MoashaSampler, PrimoConfigDefaults,
};
use super::RunResult;

/// Uniform random search at maximum fidelity; one budget unit per trial.
pub fn rs_run(bench: &dyn Benchmark, budget: f64, seed: u64) -> Result<RunResult> {
    run_rs_driver(bench, "rs", None, budget, seed)
}

/// Random search sampling every configuration from a uniformly chosen prior.
pub fn rs_prior_run(
    bench: &dyn Benchmark,
    priors: &PriorSet,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    run_rs_driver(bench, "rs-prior", Some(priors), budget, seed)
}

/// Multi-objective asynchronous successive halving with uniform sampling.
pub fn moasha_run(bench: &dyn Benchmark, budget: f64, seed: u64) -> Result<RunResult> {
    run_moasha_driver(
        bench,
        "moasha",
        MoashaSampler::PriorMix { priors: None, p_prior: 0.0 },
        PrimoConfigDefaults::ETA,
        budget,
        seed,
    )
}

/// Successive halving whose new configurations come from a uniformly chosen
/// prior with probability `p_prior` (0.5 and 1.0 are the studied settings).
pub fn moasha_prior_run(
    bench: &dyn Benchmark,
    priors: &PriorSet,
    p_prior: f64,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    let id = format!("moasha-prior-{}", (p_prior * 100.0).round() as u32);
    run_moasha_driver(
        bench,
        &id,
        MoashaSampler::PriorMix { priors: Some(priors), p_prior },
        PrimoConfigDefaults::ETA,
        budget,
        seed,
    )
}

/// Ablation: the successive-halving loop whose new-config sampler is the
/// epsilon-greedy acquisition over the scalarized max-fidelity archive
/// (uniform until the surrogate has two points).
pub fn moasha_epsbo_run(
    bench: &dyn Benchmark,
    priors: Option<&PriorSet>,
    epsilon: f64,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    run_moasha_driver(
        bench,
        "moasha-epsbo",
        MoashaSampler::EpsBo {
            priors,
            epsilon,
            candidate_budget: crate::acquisition::DEFAULT_CANDIDATE_BUDGET,
        },
        PrimoConfigDefaults::ETA,
        budget,
        seed,
    )
}

/// Scalarized BO: weights drawn once per run, `n_d` low-discrepancy initial
/// points at maximum fidelity, then pure expected improvement.
pub fn bo_rw_run(bench: &dyn Benchmark, budget: f64, seed: u64) -> Result<RunResult> {
    run_bo_driver(
        bench,
        &BoDriver {
            optimizer_id: "bo-rw".into(),
            priors: None,
            init: InitKind::LowDiscrepancy,
            acq: AcqKind::Plain,
            decay: DecayKind::Square,
            budget,
            candidate_budget: crate::acquisition::DEFAULT_CANDIDATE_BUDGET,
        },
        seed,
    )
}

/// Prior-weighted scalarized BO: initial points sampled from uniformly chosen
/// priors, every proposal weighted by a uniformly chosen prior (no
/// exploration branch), decaying as exp(-n_bo / n_d).
pub fn pibo_rw_run(
    bench: &dyn Benchmark,
    priors: &PriorSet,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    run_bo_driver(
        bench,
        &BoDriver {
            optimizer_id: "pibo-rw".into(),
            priors: Some(priors),
            init: InitKind::PriorSamples,
            acq: AcqKind::AlwaysPrior,
            decay: DecayKind::Linear,
            budget,
            candidate_budget: crate::acquisition::DEFAULT_CANDIDATE_BUDGET,
        },
        seed,
    )
}
