//! Shared run machinery: trial recording, budget accounting, the scalarized
//! BO loop, and the successive-halving loop. All optimizer entry points are
//! thin wrappers over these drivers, so identical component selections
//! consume identical RNG streams.

use std::cell::{Cell, RefCell};

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::acquisition::{acquire, gamma, pibo_gamma, AcquisitionContext, AcquisitionMode};
use crate::bench::Benchmark;
use crate::error::{PrimoError, Result};
use crate::gp::fit_gp;
use crate::harness::report::hv_trace;
use crate::harness::runlog::{DefaultsSnapshot, RunHeader, RunLog, Trial, TrialStatus, RUNLOG_FORMAT_VERSION};
use crate::moasha::Scheduler;
use crate::pareto::{pareto_set, ObjectiveVector};
use crate::prior::{PriorSet, DEFAULT_PRIOR_SIGMA};
use crate::scalarize::{sample_weights, WeightVector};
use crate::seed::rng_from_seed;
use crate::space::Configuration;

use super::RunResult;

/// Builds a consistent trial sequence with running budget accounting.
#[derive(Debug, Clone, Default)]
pub struct TrialRecorder {
    trials: Vec<Trial>,
    cumulative: f64,
}

impl TrialRecorder {
    pub fn new() -> Self {
        TrialRecorder::default()
    }

    /// Continues recording after an already-produced prefix.
    pub fn resume(trials: Vec<Trial>) -> Self {
        let cumulative = trials.last().map(|t| t.cumulative).unwrap_or(0.0);
        TrialRecorder { trials, cumulative }
    }

    pub fn consumed(&self) -> f64 {
        self.cumulative
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        config: &Configuration,
        fidelity: u32,
        is_continuation: bool,
        objectives: Option<&ObjectiveVector>,
        scalarized: Option<f64>,
        delta: f64,
        status: TrialStatus,
    ) {
        self.cumulative += delta;
        self.trials.push(Trial {
            index: self.trials.len(),
            config: config.raw().to_vec(),
            fidelity,
            is_continuation,
            objectives: objectives.map(|y| y.values().to_vec()),
            scalarized,
            delta,
            cumulative: self.cumulative,
            wall_ms: 0,
            status,
        });
    }

    pub fn into_trials(self) -> Vec<Trial> {
        self.trials
    }
}

/// Benchmark call with failure capture; failed evaluations still cost budget.
pub(crate) fn try_evaluate(
    bench: &dyn Benchmark,
    config: &Configuration,
    z: u32,
) -> std::result::Result<ObjectiveVector, String> {
    match bench.evaluate(config, z) {
        Ok(y) => Ok(y),
        Err(e) => {
            log::warn!("benchmark '{}' evaluation failed at z={z}: {e}", bench.name());
            Err(e.to_string())
        }
    }
}

const HALTON_PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points under a random Cranley-Patterson shift.
pub(crate) fn low_discrepancy_unit_points(
    count: usize,
    dims: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|i| {
            (0..dims)
                .map(|d| (halton(i as u64 + 1, HALTON_PRIMES[d % HALTON_PRIMES.len()]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

pub(crate) fn condition_label(priors: Option<&PriorSet>) -> String {
    match priors {
        None => "none".into(),
        Some(set) => set
            .priors()
            .iter()
            .map(|p| p.quality().to_string())
            .collect::<Vec<_>>()
            .join(":"),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn make_header(
    optimizer_id: &str,
    bench: &dyn Benchmark,
    seed: u64,
    priors: Option<&PriorSet>,
    budget: f64,
    eta: u32,
    n_init: f64,
    epsilon: f64,
    candidate_budget: usize,
) -> RunHeader {
    RunHeader {
        version: RUNLOG_FORMAT_VERSION,
        optimizer: optimizer_id.to_string(),
        benchmark: bench.name().to_string(),
        param_names: bench.space().param_names(),
        n_objectives: bench.n_objectives(),
        z_max: bench.space().z_max(),
        reference_point: bench.reference_point().values().to_vec(),
        seed,
        prior_condition: condition_label(priors),
        budget,
        defaults: DefaultsSnapshot {
            eta,
            n_init,
            epsilon,
            candidate_budget,
            prior_sigma: DEFAULT_PRIOR_SIGMA,
        },
    }
}

pub(crate) fn finish_run(
    header: RunHeader,
    trials: Vec<Trial>,
    archive: Vec<(Configuration, ObjectiveVector)>,
) -> Result<RunResult> {
    let log = RunLog { header, trials };
    log.check_accounting()?;
    let trace = hv_trace(&log)?;
    Ok(RunResult {
        pareto: pareto_set(&archive),
        hv_trace: trace.into_iter().map(|(k, hv)| (k as f64, hv)).collect(),
        log,
    })
}

/// Initial design of the scalarized BO loop.
pub(crate) enum InitKind {
    /// Successive-halving design up to `n_init` equivalent evaluations.
    Moasha { n_init: f64, eta: u32 },
    /// `n_d` scrambled low-discrepancy points at maximum fidelity.
    LowDiscrepancy,
    /// `n_d` points, each drawn from a uniformly chosen prior.
    PriorSamples,
}

pub(crate) enum AcqKind {
    Plain,
    EpsGreedy { epsilon: f64 },
    AlwaysPrior,
}

pub(crate) enum DecayKind {
    /// exp(-n_bo^2 / n_d)
    Square,
    /// exp(-n_bo / n_d)
    Linear,
}

pub(crate) struct BoDriver<'a> {
    pub optimizer_id: String,
    pub priors: Option<&'a PriorSet>,
    pub init: InitKind,
    pub acq: AcqKind,
    pub decay: DecayKind,
    pub budget: f64,
    pub candidate_budget: usize,
}

/// The scalarized Bayesian-optimization loop shared by the main optimizer,
/// its ablations, and the BO-style baselines.
///
/// Weights are drawn exactly once, before anything else; the surrogate
/// dataset only ever receives maximum-fidelity observations.
pub(crate) fn run_bo_driver(bench: &dyn Benchmark, d: &BoDriver, seed: u64) -> Result<RunResult> {
    let space = bench.space();
    let n = bench.n_objectives();
    let n_d = space.n_d();
    let z_max = space.z_max();
    if !matches!(d.acq, AcqKind::Plain) || matches!(d.init, InitKind::PriorSamples) {
        let set = d.priors.ok_or_else(|| {
            PrimoError::Missing(format!("optimizer '{}' requires a prior set", d.optimizer_id))
        })?;
        if set.len() != n {
            return Err(PrimoError::domain(format!(
                "prior set covers {} objectives, benchmark has {n}",
                set.len()
            )));
        }
        if set.priors().iter().any(|p| p.n_d() != n_d) {
            return Err(PrimoError::domain("prior dimensionality does not match the search space"));
        }
    }

    let mut rng = rng_from_seed(seed);
    let w = sample_weights(n, &mut rng)?;
    let mut dataset: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut archive: Vec<(Configuration, ObjectiveVector)> = Vec::new();

    let (mut rec, eta, n_init) = match d.init {
        InitKind::Moasha { n_init, eta } => {
            let init = super::primo::init_design(bench, &w, n_init, eta, &mut rng)?;
            dataset = init.dataset;
            archive = init.archive;
            (TrialRecorder::resume(init.trials), eta, n_init)
        }
        InitKind::LowDiscrepancy => {
            let mut rec = TrialRecorder::new();
            for u in low_discrepancy_unit_points(n_d, n_d, &mut rng) {
                let cfg = space.denormalize(&u)?;
                eval_full_fidelity(bench, &cfg, &w, &mut dataset, &mut archive, &mut rec)?;
            }
            (rec, PrimoConfigDefaults::ETA, n_d as f64)
        }
        InitKind::PriorSamples => {
            let set = d.priors.expect("checked above");
            let mut rec = TrialRecorder::new();
            for _ in 0..n_d {
                let j = rng.random_range(0..set.len());
                let u = set.priors()[j].sample_unit(&mut rng);
                let cfg = space.denormalize(&u)?;
                eval_full_fidelity(bench, &cfg, &w, &mut dataset, &mut archive, &mut rec)?;
            }
            (rec, PrimoConfigDefaults::ETA, n_d as f64)
        }
    };

    // The surrogate needs two points; top up uniformly if the design came up
    // short (failures, or every budget unit spent below maximum fidelity).
    while dataset.len() < 2 {
        log::warn!(
            "initial design yielded {} max-fidelity points; sampling uniformly at z_max",
            dataset.len()
        );
        let cfg = space.sample_uniform(&mut rng);
        eval_full_fidelity(bench, &cfg, &w, &mut dataset, &mut archive, &mut rec)?;
    }

    let epsilon = match d.acq {
        AcqKind::EpsGreedy { epsilon } => epsilon,
        _ => 0.0,
    };
    let mut n_bo = 0usize;
    while rec.consumed() < d.budget {
        let model = fit_gp(&dataset)?;
        let ctx = AcquisitionContext::new(&dataset, n_bo, epsilon);
        let g = match d.decay {
            DecayKind::Square => gamma(n_bo, n_d),
            DecayKind::Linear => pibo_gamma(n_bo, n_d),
        };
        let mode = match d.acq {
            AcqKind::Plain => AcquisitionMode::Plain,
            AcqKind::EpsGreedy { .. } => AcquisitionMode::EpsGreedy,
            AcqKind::AlwaysPrior => AcquisitionMode::AlwaysPrior,
        };
        let proposal = acquire(&ctx, &model, d.priors, mode, g, d.candidate_budget, &mut rng);
        n_bo += 1;
        let cfg = space.denormalize(&proposal.point)?;
        match try_evaluate(bench, &cfg, z_max) {
            Ok(y) => {
                let s = w.scalarize(&y)?;
                dataset.push((cfg.unit().to_vec(), s));
                archive.push((cfg.clone(), y.clone()));
                rec.record(&cfg, z_max, false, Some(&y), Some(s), 1.0, TrialStatus::Ok);
            }
            Err(_) => {
                let imputed = impute_failed_target(&dataset);
                log::warn!("imputing scalarized target {imputed} for a failed evaluation");
                dataset.push((cfg.unit().to_vec(), imputed));
                rec.record(&cfg, z_max, false, None, Some(imputed), 1.0, TrialStatus::Failed);
            }
        }
    }

    let header = make_header(
        &d.optimizer_id,
        bench,
        seed,
        d.priors,
        d.budget,
        eta,
        n_init,
        epsilon,
        d.candidate_budget,
    );
    finish_run(header, rec.into_trials(), archive)
}

/// Worst seen target plus one standard deviation of the targets.
fn impute_failed_target(dataset: &[(Vec<f64>, f64)]) -> f64 {
    let worst = dataset.iter().map(|(_, y)| *y).fold(f64::NEG_INFINITY, f64::max);
    let n = dataset.len() as f64;
    let mean = dataset.iter().map(|(_, y)| *y).sum::<f64>() / n;
    let sd = (dataset.iter().map(|(_, y)| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
    worst + sd
}

fn eval_full_fidelity(
    bench: &dyn Benchmark,
    cfg: &Configuration,
    w: &WeightVector,
    dataset: &mut Vec<(Vec<f64>, f64)>,
    archive: &mut Vec<(Configuration, ObjectiveVector)>,
    rec: &mut TrialRecorder,
) -> Result<()> {
    let z_max = bench.space().z_max();
    match try_evaluate(bench, cfg, z_max) {
        Ok(y) => {
            let s = w.scalarize(&y)?;
            dataset.push((cfg.unit().to_vec(), s));
            archive.push((cfg.clone(), y.clone()));
            rec.record(cfg, z_max, false, Some(&y), Some(s), 1.0, TrialStatus::Ok);
        }
        Err(_) => {
            rec.record(cfg, z_max, false, None, None, 1.0, TrialStatus::Failed);
        }
    }
    Ok(())
}

pub(crate) struct PrimoConfigDefaults;

impl PrimoConfigDefaults {
    pub const ETA: u32 = 3;
    pub const EPSILON: f64 = 0.25;
    pub const N_INIT: f64 = 5.0;
}

/// Sampler variants for the successive-halving family.
pub(crate) enum MoashaSampler<'a> {
    /// Uniform, or from a uniformly chosen prior with probability `p_prior`.
    PriorMix { priors: Option<&'a PriorSet>, p_prior: f64 },
    /// New configurations proposed by the epsilon-greedy acquisition over the
    /// scalarized max-fidelity archive (uniform until two points exist).
    EpsBo { priors: Option<&'a PriorSet>, epsilon: f64, candidate_budget: usize },
}

/// Successive-halving loop to the equivalent-evaluation budget; promotions
/// are charged their fidelity delta (continuations).
pub(crate) fn run_moasha_driver(
    bench: &dyn Benchmark,
    optimizer_id: &str,
    sampler: MoashaSampler,
    eta: u32,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    let space = bench.space();
    let n = bench.n_objectives();
    let n_d = space.n_d();
    let z_max = space.z_max();
    if let MoashaSampler::PriorMix { priors, p_prior } = &sampler {
        if !(0.0..=1.0).contains(p_prior) {
            return Err(PrimoError::domain(format!("p_prior must be in [0,1], got {p_prior}")));
        }
        if *p_prior > 0.0 && priors.is_none() {
            return Err(PrimoError::Missing(format!(
                "optimizer '{optimizer_id}' requires a prior set"
            )));
        }
    }
    let (header_priors, epsilon, candidate_budget) = match &sampler {
        MoashaSampler::PriorMix { priors, .. } => (*priors, PrimoConfigDefaults::EPSILON, 0),
        MoashaSampler::EpsBo { priors, epsilon, candidate_budget } => {
            (*priors, *epsilon, *candidate_budget)
        }
    };

    let mut rng = rng_from_seed(seed);
    // Only the model-guided sampler scalarizes; it draws its weights first,
    // mirroring the BO drivers.
    let w = match &sampler {
        MoashaSampler::EpsBo { .. } => Some(sample_weights(n, &mut rng)?),
        MoashaSampler::PriorMix { .. } => None,
    };

    let mut sched = Scheduler::new(space.z_min(), z_max, eta)?;
    let mut rec = TrialRecorder::new();
    let mut archive: Vec<(Configuration, ObjectiveVector)> = Vec::new();
    let dataset: RefCell<Vec<(Vec<f64>, f64)>> = RefCell::new(Vec::new());
    let model_cache: RefCell<Option<(usize, crate::gp::GpModel)>> = RefCell::new(None);
    let n_bo = Cell::new(0usize);

    while rec.consumed() < budget {
        let suggestion = {
            let mut new_config = |rng: &mut ChaCha20Rng| -> Configuration {
                match &sampler {
                    MoashaSampler::PriorMix { priors, p_prior } => {
                        if *p_prior > 0.0 && rng.random::<f64>() < *p_prior {
                            let set = priors.expect("validated above");
                            let j = rng.random_range(0..set.len());
                            let u = set.priors()[j].sample_unit(rng);
                            space.denormalize(&u).expect("prior samples stay in the cube")
                        } else {
                            space.sample_uniform(rng)
                        }
                    }
                    MoashaSampler::EpsBo { priors, epsilon, candidate_budget } => {
                        let data = dataset.borrow();
                        if data.len() >= 2 {
                            let refresh = model_cache
                                .borrow()
                                .as_ref()
                                .map_or(true, |(len, _)| *len != data.len());
                            if refresh {
                                match fit_gp(&data) {
                                    Ok(m) => *model_cache.borrow_mut() = Some((data.len(), m)),
                                    Err(e) => {
                                        log::warn!("surrogate refit failed, sampling uniformly: {e}");
                                        *model_cache.borrow_mut() = None;
                                    }
                                }
                            }
                            if let Some((_, model)) = model_cache.borrow().as_ref() {
                                let ctx = AcquisitionContext::new(&data, n_bo.get(), *epsilon);
                                let g = gamma(n_bo.get(), n_d);
                                let mode = if priors.is_some() {
                                    AcquisitionMode::EpsGreedy
                                } else {
                                    AcquisitionMode::Plain
                                };
                                let proposal =
                                    acquire(&ctx, model, *priors, mode, g, *candidate_budget, rng);
                                n_bo.set(n_bo.get() + 1);
                                return space
                                    .denormalize(&proposal.point)
                                    .expect("acquisition stays in the cube");
                            }
                        }
                        space.sample_uniform(rng)
                    }
                }
            };
            sched.suggest(&mut rng, &mut new_config)
        };
        let delta = match suggestion.previous_fidelity {
            Some(prev) => (suggestion.fidelity - prev) as f64 / z_max as f64,
            None => suggestion.fidelity as f64 / z_max as f64,
        };
        match try_evaluate(bench, &suggestion.config, suggestion.fidelity) {
            Ok(y) => {
                sched.observe(suggestion.id, suggestion.fidelity, y.clone())?;
                let mut scalarized = None;
                if suggestion.fidelity == z_max {
                    if let Some(w) = &w {
                        let s = w.scalarize(&y)?;
                        dataset.borrow_mut().push((suggestion.config.unit().to_vec(), s));
                        scalarized = Some(s);
                    }
                    archive.push((suggestion.config.clone(), y.clone()));
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

    let header = make_header(
        optimizer_id,
        bench,
        seed,
        header_priors,
        budget,
        eta,
        PrimoConfigDefaults::N_INIT,
        epsilon,
        candidate_budget,
    );
    finish_run(header, rec.into_trials(), archive)
}

/// One full-fidelity evaluation per budget unit, config drawn uniformly or
/// from a uniformly chosen prior.
pub(crate) fn run_rs_driver(
    bench: &dyn Benchmark,
    optimizer_id: &str,
    priors: Option<&PriorSet>,
    budget: f64,
    seed: u64,
) -> Result<RunResult> {
    let space = bench.space();
    if let Some(set) = priors {
        if set.len() != bench.n_objectives() {
            return Err(PrimoError::domain(format!(
                "prior set covers {} objectives, benchmark has {}",
                set.len(),
                bench.n_objectives()
            )));
        }
    }
    let z_max = space.z_max();
    let mut rng = rng_from_seed(seed);
    let mut rec = TrialRecorder::new();
    let mut archive = Vec::new();
    while rec.consumed() < budget {
        let cfg = match priors {
            Some(set) => {
                let j = rng.random_range(0..set.len());
                let u = set.priors()[j].sample_unit(&mut rng);
                space.denormalize(&u)?
            }
            None => space.sample_uniform(&mut rng),
        };
        match try_evaluate(bench, &cfg, z_max) {
            Ok(y) => {
                archive.push((cfg.clone(), y.clone()));
                rec.record(&cfg, z_max, false, Some(&y), None, 1.0, TrialStatus::Ok);
            }
            Err(_) => rec.record(&cfg, z_max, false, None, None, 1.0, TrialStatus::Failed),
        }
    }
    let header = make_header(
        optimizer_id,
        bench,
        seed,
        priors,
        budget,
        PrimoConfigDefaults::ETA,
        PrimoConfigDefaults::N_INIT,
        PrimoConfigDefaults::EPSILON,
        0,
    );
    finish_run(header, rec.into_trials(), archive)
}
