//! Dominance relations, Pareto filtering, and the hypervolume indicator.
//!
//! All objectives are minimized. The exact hypervolume is implemented for one
//! and two objectives (sorted sweep); three or more fall back to Monte Carlo
//! over the box spanned by the ideal point and the reference point.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrimoError, Result};
use crate::seed::rng_from_seed;

/// Number of Monte Carlo samples used when no exact algorithm applies.
pub const HV_MC_SAMPLES: usize = 200_000;

/// A vector of objective values, all minimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PrimoError::domain("objective vector must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PrimoError::domain(format!("objective vector has non-finite values: {values:?}")));
        }
        Ok(ObjectiveVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The fixed per-benchmark point bounding the hypervolume region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferencePoint(Vec<f64>);

impl ReferencePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(PrimoError::domain("reference point must be non-empty and finite"));
        }
        Ok(ReferencePoint(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(PrimoError::domain(format!(
            "dominance needs equal lengths, got {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_slices(a.values(), b.values()))
}

fn dominates_slices(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of the non-dominated subset, in input order.
///
/// Maintains the running front incrementally; identical points are all kept
/// (none strictly dominates the other).
pub fn pareto_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut front: Vec<usize> = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for &j in &front {
            if dominates_slices(points[j].values(), p.values()) {
                continue 'outer;
            }
        }
        front.retain(|&j| !dominates_slices(p.values(), points[j].values()));
        front.push(i);
    }
    front.sort_unstable();
    front
}

/// Non-dominated subset of `(payload, objectives)` pairs, input order preserved.
pub fn pareto_set<T: Clone>(entries: &[(T, ObjectiveVector)]) -> Vec<(T, ObjectiveVector)> {
    let objs: Vec<ObjectiveVector> = entries.iter().map(|(_, y)| y.clone()).collect();
    pareto_indices(&objs).into_iter().map(|i| entries[i].clone()).collect()
}

/// Exact dominated hypervolume for one or two objectives; Monte Carlo above.
///
/// Points with a coordinate beyond the reference point contribute only the
/// part of their box inside it.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<f64> {
    check_dims(points, reference)?;
    if points.is_empty() {
        return Ok(0.0);
    }
    match reference.len() {
        1 => {
            let best = points.iter().map(|p| p.values()[0]).fold(f64::INFINITY, f64::min);
            Ok((reference.values()[0] - best).max(0.0))
        }
        2 => Ok(sweep_2d(points, reference.values())),
        _ => {
            let mut rng = rng_from_seed(0x48565f4d43); // fixed stream: estimate is reproducible
            Ok(hypervolume_mc(points, reference, HV_MC_SAMPLES, &mut rng)?.0)
        }
    }
}

/// Sorted sweep over the clipped points. O(m log m), exact.
fn sweep_2d(points: &[ObjectiveVector], r: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> =
        points.iter().map(|p| (p.values()[0], p.values()[1])).collect();
    hypervolume_2d_pairs(&mut pts, (r[0], r[1]))
}

/// Exact two-objective hypervolume over raw pairs (sorted in place).
/// Allocation-free variant for dense-grid oracles.
pub fn hypervolume_2d_pairs(points: &mut Vec<(f64, f64)>, reference: (f64, f64)) -> f64 {
    for p in points.iter_mut() {
        p.0 = p.0.min(reference.0);
        p.1 = p.1.min(reference.1);
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite objectives"));
    let mut hv = 0.0;
    let mut best_y = reference.1;
    for &(x, y) in points.iter() {
        if y < best_y {
            hv += (reference.0 - x) * (best_y - y);
            best_y = y;
        }
    }
    hv
}

/// Monte Carlo estimate over the box `[ideal, reference]`; returns
/// `(estimate, standard_error)`.
pub fn hypervolume_mc(
    points: &[ObjectiveVector],
    reference: &ReferencePoint,
    samples: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, f64)> {
    check_dims(points, reference)?;
    if points.is_empty() || samples == 0 {
        return Ok((0.0, 0.0));
    }
    let n = reference.len();
    let r = reference.values();
    let ideal: Vec<f64> = (0..n)
        .map(|d| points.iter().map(|p| p.values()[d]).fold(f64::INFINITY, f64::min).min(r[d]))
        .collect();
    let box_vol: f64 = (0..n).map(|d| r[d] - ideal[d]).product();
    if box_vol <= 0.0 {
        return Ok((0.0, 0.0));
    }
    // Only the front can dominate a sample; filtering keeps the inner loop short.
    let front: Vec<&ObjectiveVector> = pareto_indices(points).into_iter().map(|i| &points[i]).collect();
    let mut hits = 0usize;
    let mut sample = vec![0.0; n];
    for _ in 0..samples {
        for d in 0..n {
            sample[d] = ideal[d] + rng.random::<f64>() * (r[d] - ideal[d]);
        }
        if front.iter().any(|p| p.values().iter().zip(&sample).all(|(a, s)| a <= s)) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let est = box_vol * p;
    let se = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
    Ok((est, se))
}

/// Hypervolume improvement of `new_points` over the current set. Never negative.
pub fn hvi(
    current: &[ObjectiveVector],
    reference: &ReferencePoint,
    new_points: &[ObjectiveVector],
) -> Result<f64> {
    let before = hypervolume(current, reference)?;
    let mut union: Vec<ObjectiveVector> = current.to_vec();
    union.extend(new_points.iter().cloned());
    let after = hypervolume(&union, reference)?;
    Ok((after - before).max(0.0))
}

/// Per-step `(hv_best - hv_t) / hv_best`, clipped to `[0, 1]`.
pub fn normalized_hv_regret(hv_trace: &[f64], hv_best: f64) -> Result<Vec<f64>> {
    if hv_best <= 0.0 {
        return Err(PrimoError::domain(format!("hv_best must be positive, got {hv_best}")));
    }
    Ok(hv_trace.iter().map(|hv| ((hv_best - hv) / hv_best).clamp(0.0, 1.0)).collect())
}

fn check_dims(points: &[ObjectiveVector], reference: &ReferencePoint) -> Result<()> {
    for p in points {
        if p.len() != reference.len() {
            return Err(PrimoError::domain(format!(
                "reference point has {} objectives but a point has {}",
                reference.len(),
                p.len()
            )));
        }
    }
    Ok(())
}
