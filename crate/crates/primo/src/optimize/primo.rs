//! The prior-informed multi-objective optimizer: a successive-halving initial
//! design feeding an epsilon-greedy, prior-weighted, randomly scalarized BO
//! loop. Single-objective problems run the same machinery with a scalar
//! scheduler ranking and the one prior in every weighted branch.

use rand_chacha::ChaCha20Rng;

use crate::bench::Benchmark;
use crate::error::{PrimoError, Result};
use crate::harness::runlog::{Trial, TrialStatus};
use crate::moasha::Scheduler;
use crate::pareto::ObjectiveVector;
use crate::prior::{Prior, PriorSet};
use crate::scalarize::WeightVector;
use crate::space::Configuration;

use super::driver::{run_bo_driver, try_evaluate, AcqKind, BoDriver, DecayKind, InitKind, TrialRecorder};
use super::{Mode, PrimoConfig, RunResult};

/// Output of the initial design: the scalarized max-fidelity dataset, the raw
/// archive behind it, and the trials with their budget accounting.
#[derive(Debug, Clone)]
pub struct InitDesign {
    pub dataset: Vec<(Vec<f64>, f64)>,
    pub archive: Vec<(Configuration, ObjectiveVector)>,
    pub trials: Vec<Trial>,
    pub consumed: f64,
}

/// Runs the successive-halving scheduler with a uniform sampler until
/// `n_init` equivalent evaluations are spent. Only maximum-fidelity results
/// enter the returned dataset; continuations are charged their fidelity
/// delta; failed evaluations are charged but excluded.
pub fn init_design(
    bench: &dyn Benchmark,
    w: &WeightVector,
    n_init: f64,
    eta: u32,
    rng: &mut ChaCha20Rng,
) -> Result<InitDesign> {
    if !(n_init > 0.0) {
        return Err(PrimoError::domain(format!("n_init must be positive, got {n_init}")));
    }
    let space = bench.space();
    let z_max = space.z_max();
    let mut sched = Scheduler::new(space.z_min(), z_max, eta)?;
    let mut rec = TrialRecorder::new();
    let mut dataset = Vec::new();
    let mut archive = Vec::new();

    while rec.consumed() < n_init {
        let suggestion = sched.suggest(rng, &mut |rng| space.sample_uniform(rng));
        let delta = match suggestion.previous_fidelity {
            Some(prev) => (suggestion.fidelity - prev) as f64 / z_max as f64,
            None => suggestion.fidelity as f64 / z_max as f64,
        };
        match try_evaluate(bench, &suggestion.config, suggestion.fidelity) {
            Ok(y) => {
                sched.observe(suggestion.id, suggestion.fidelity, y.clone())?;
                let mut scalarized = None;
                if suggestion.fidelity == z_max {
                    let s = w.scalarize(&y)?;
                    dataset.push((suggestion.config.unit().to_vec(), s));
                    archive.push((suggestion.config.clone(), y.clone()));
                    scalarized = Some(s);
                }
                rec.record(
                    &suggestion.config,
                    suggestion.fidelity,
                    suggestion.is_continuation,
                    Some(&y),
                    scalarized,
                    delta,
                    TrialStatus::Ok,
                );
            }
            Err(_) => {
                sched.fail(suggestion.id, suggestion.fidelity)?;
                rec.record(
                    &suggestion.config,
                    suggestion.fidelity,
                    suggestion.is_continuation,
                    None,
                    None,
                    delta,
                    TrialStatus::Failed,
                );
            }
        }
    }
    let consumed = rec.consumed();
    Ok(InitDesign { dataset, archive, trials: rec.into_trials(), consumed })
}

fn primo_id(cfg: &PrimoConfig) -> String {
    let mut id = String::from("primo");
    if cfg.disable_init_design {
        id.push_str("-no-init");
    }
    if cfg.disable_priors {
        id.push_str("-no-priors");
    }
    if cfg.disable_epsilon {
        id.push_str("-no-eps");
    }
    id
}

/// Full optimizer run. Weights are sampled once; the initial design (unless
/// disabled) feeds max-fidelity seed points to the BO phase, whose
/// acquisition is weighted by a uniformly chosen objective's prior decaying
/// with the square of the BO sample count.
pub fn primo_run(
    bench: &dyn Benchmark,
    priors: Option<&PriorSet>,
    cfg: &PrimoConfig,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    let n = bench.n_objectives();
    if cfg.mode == Mode::SingleObjective && n != 1 {
        return Err(PrimoError::domain(format!(
            "single-objective mode needs a 1-objective benchmark, got {n}"
        )));
    }
    let priors = if cfg.disable_priors { None } else { priors };
    if !cfg.disable_priors && priors.is_none() {
        return Err(PrimoError::Missing(
            "a prior per objective is required unless priors are disabled".into(),
        ));
    }
    let driver = BoDriver {
        optimizer_id: primo_id(cfg),
        priors,
        init: if cfg.disable_init_design {
            InitKind::LowDiscrepancy
        } else {
            InitKind::Moasha { n_init: cfg.n_init, eta: cfg.eta }
        },
        acq: if cfg.disable_priors {
            AcqKind::Plain
        } else if cfg.disable_epsilon {
            AcqKind::AlwaysPrior
        } else {
            AcqKind::EpsGreedy { epsilon: cfg.epsilon }
        },
        decay: DecayKind::Square,
        budget: cfg.budget,
        candidate_budget: cfg.candidate_budget,
    };
    run_bo_driver(bench, &driver, seed)
}

/// Single-objective mode: scalar scheduler ranking, identity scalarization,
/// and the single prior in every prior-weighted branch.
pub fn primo_so_run(
    bench: &dyn Benchmark,
    prior: &Prior,
    cfg: &PrimoConfig,
    seed: u64,
) -> Result<RunResult> {
    if bench.n_objectives() != 1 {
        return Err(PrimoError::domain(format!(
            "single-objective mode needs a 1-objective benchmark, got {}",
            bench.n_objectives()
        )));
    }
    if prior.objective_index() != 0 {
        return Err(PrimoError::domain("a single-objective prior must have objective index 0"));
    }
    let set = PriorSet::new(vec![prior.clone()])?;
    let cfg = PrimoConfig { mode: Mode::SingleObjective, ..cfg.clone() };
    primo_run(bench, Some(&set), &cfg, seed)
}
