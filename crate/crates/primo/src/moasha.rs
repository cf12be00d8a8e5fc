//! Asynchronous successive halving over geometric fidelity rungs, with a
//! multi-objective promotion rule: candidates are ranked by non-dominated
//! sorting, and ordered inside each front by a greedy farthest-point pass in
//! normalized objective space. With one objective this degenerates to plain
//! ASHA (ascending scalar sort).
//!
//! The scheduler is driven through `suggest`/`observe` by a single writer;
//! evaluations may run concurrently in between.

use std::collections::{HashMap, HashSet};

use rand_chacha::ChaCha20Rng;

use crate::error::{PrimoError, Result};
use crate::pareto::{pareto_indices, ObjectiveVector};
use crate::space::Configuration;

pub type ConfigId = u64;

/// Geometric rung fidelities: `z_min * eta^k` while below `z_max`, then `z_max`.
pub fn rung_levels(z_min: u32, z_max: u32, eta: u32) -> Result<Vec<u32>> {
    if z_min < 1 || z_min >= z_max {
        return Err(PrimoError::domain(format!(
            "rung levels need 1 <= z_min < z_max, got [{z_min}, {z_max}]"
        )));
    }
    if eta < 2 {
        return Err(PrimoError::domain(format!("reduction factor must be >= 2, got {eta}")));
    }
    let mut levels = Vec::new();
    let mut cur = z_min as u64;
    while cur < z_max as u64 {
        levels.push(cur as u32);
        cur = cur.saturating_mul(eta as u64);
    }
    levels.push(z_max);
    Ok(levels)
}

/// Rank permutation: non-dominated fronts first, greedy max-min-distance
/// diversity inside each front.
///
/// Distances are measured after normalizing every coordinate to [0,1] over
/// all given records. The first pick of a front is its lexicographic minimum;
/// every later pick maximizes the minimum Euclidean distance to the already
/// picked points. All ties break on insertion index.
pub fn mo_rank(records: &[ObjectiveVector]) -> Vec<usize> {
    if records.is_empty() {
        return Vec::new();
    }
    let dims = records[0].len();
    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for r in records {
        for (d, &v) in r.values().iter().enumerate() {
            lo[d] = lo[d].min(v);
            hi[d] = hi[d].max(v);
        }
    }
    let normalized: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            r.values()
                .iter()
                .enumerate()
                .map(|(d, &v)| if hi[d] > lo[d] { (v - lo[d]) / (hi[d] - lo[d]) } else { 0.0 })
                .collect()
        })
        .collect();

    let mut order = Vec::with_capacity(records.len());
    let mut remaining: Vec<usize> = (0..records.len()).collect();
    while !remaining.is_empty() {
        let subset: Vec<ObjectiveVector> = remaining.iter().map(|&i| records[i].clone()).collect();
        let front: Vec<usize> = pareto_indices(&subset).into_iter().map(|k| remaining[k]).collect();
        order.extend(diversity_order(&front, &normalized));
        remaining.retain(|i| !front.contains(i));
    }
    order
}

fn diversity_order(front: &[usize], normalized: &[Vec<f64>]) -> Vec<usize> {
    if front.len() <= 1 {
        return front.to_vec();
    }
    // Lexicographic minimum first; insertion index settles exact ties.
    let first = *front
        .iter()
        .min_by(|&&a, &&b| {
            normalized[a]
                .partial_cmp(&normalized[b])
                .expect("finite objectives")
                .then(a.cmp(&b))
        })
        .expect("non-empty front");
    let mut picked = vec![first];
    let mut rest: Vec<usize> = front.iter().copied().filter(|&i| i != first).collect();
    while !rest.is_empty() {
        let (pos, _) = rest
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let min_dist = picked
                    .iter()
                    .map(|&p| euclidean(&normalized[i], &normalized[p]))
                    .fold(f64::INFINITY, f64::min);
                (pos, min_dist)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distance").then(b.0.cmp(&a.0)))
            .expect("non-empty rest");
        picked.push(rest.remove(pos));
    }
    picked
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One fidelity level and the results observed at it.
#[derive(Debug, Clone)]
pub struct Rung {
    pub level_index: usize,
    pub fidelity: u32,
    pub records: Vec<(ConfigId, ObjectiveVector)>,
    pub promoted: HashSet<ConfigId>,
}

/// What to evaluate next: a fresh configuration at the lowest rung or the
/// continuation of a promoted one.
#[derive(Debug, Clone)]
pub struct Suggestion {
    pub id: ConfigId,
    pub config: Configuration,
    pub fidelity: u32,
    pub is_continuation: bool,
    pub previous_fidelity: Option<u32>,
}

/// Single-writer scheduler state.
#[derive(Debug, Clone)]
pub struct Scheduler {
    rungs: Vec<Rung>,
    eta: u32,
    pending: HashMap<ConfigId, u32>,
    configs: HashMap<ConfigId, Configuration>,
    next_id: ConfigId,
}

impl Scheduler {
    pub fn new(z_min: u32, z_max: u32, eta: u32) -> Result<Self> {
        let rungs = rung_levels(z_min, z_max, eta)?
            .into_iter()
            .enumerate()
            .map(|(level_index, fidelity)| Rung {
                level_index,
                fidelity,
                records: Vec::new(),
                promoted: HashSet::new(),
            })
            .collect();
        Ok(Scheduler { rungs, eta, pending: HashMap::new(), configs: HashMap::new(), next_id: 0 })
    }

    pub fn rungs(&self) -> &[Rung] {
        &self.rungs
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    /// Promotes the best-ranked eligible record from the highest possible
    /// rung, or samples a new configuration at the lowest fidelity.
    ///
    /// A record at a rung holding `m` results is promotable when its rank is
    /// below `floor(m / eta)`, it has not been promoted before, and it is not
    /// currently in flight.
    pub fn suggest(
        &mut self,
        rng: &mut ChaCha20Rng,
        new_config: &mut dyn FnMut(&mut ChaCha20Rng) -> Configuration,
    ) -> Suggestion {
        for k in (0..self.rungs.len() - 1).rev() {
            let slots = self.rungs[k].records.len() / self.eta as usize;
            if slots == 0 {
                continue;
            }
            let objs: Vec<ObjectiveVector> =
                self.rungs[k].records.iter().map(|(_, y)| y.clone()).collect();
            let perm = mo_rank(&objs);
            for &pos in perm.iter().take(slots) {
                let id = self.rungs[k].records[pos].0;
                if self.rungs[k].promoted.contains(&id) || self.pending.contains_key(&id) {
                    continue;
                }
                let next_fidelity = self.rungs[k + 1].fidelity;
                let previous_fidelity = self.rungs[k].fidelity;
                self.rungs[k].promoted.insert(id);
                self.pending.insert(id, next_fidelity);
                return Suggestion {
                    id,
                    config: self.configs[&id].clone(),
                    fidelity: next_fidelity,
                    is_continuation: true,
                    previous_fidelity: Some(previous_fidelity),
                };
            }
        }
        let config = new_config(rng);
        let id = self.next_id;
        self.next_id += 1;
        let fidelity = self.rungs[0].fidelity;
        self.configs.insert(id, config.clone());
        self.pending.insert(id, fidelity);
        Suggestion { id, config, fidelity, is_continuation: false, previous_fidelity: None }
    }

    /// Records the result of a previously suggested evaluation.
    pub fn observe(&mut self, id: ConfigId, fidelity: u32, y: ObjectiveVector) -> Result<()> {
        match self.pending.get(&id) {
            Some(&expected) if expected == fidelity => {}
            _ => {
                return Err(PrimoError::protocol(format!(
                    "no pending evaluation of config {id} at fidelity {fidelity}"
                )))
            }
        }
        let rung = self
            .rungs
            .iter_mut()
            .find(|r| r.fidelity == fidelity)
            .ok_or_else(|| PrimoError::protocol(format!("fidelity {fidelity} is not a rung level")))?;
        if rung.records.iter().any(|(rid, _)| *rid == id) {
            return Err(PrimoError::protocol(format!(
                "config {id} already has a record at fidelity {fidelity}"
            )));
        }
        rung.records.push((id, y));
        self.pending.remove(&id);
        Ok(())
    }

    /// Drops a pending evaluation that failed; the configuration stays dead.
    pub fn fail(&mut self, id: ConfigId, fidelity: u32) -> Result<()> {
        match self.pending.get(&id) {
            Some(&expected) if expected == fidelity => {
                self.pending.remove(&id);
                Ok(())
            }
            _ => Err(PrimoError::protocol(format!(
                "no pending evaluation of config {id} at fidelity {fidelity}"
            ))),
        }
    }
}
