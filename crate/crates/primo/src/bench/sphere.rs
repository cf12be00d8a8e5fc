//! Synthetic sphere-family benchmarks with known optima.
//!
//! Objective `i` in normalized space is the squared distance to a center
//! `c_i`, plus a smooth fidelity bias that vanishes at maximum fidelity:
//!
//! `f_i(u, z) = ||u - c_i||^2 + bias * (1 - z/z_max) * g_i(u) + offset_i`
//!
//! with `g_i(u) = prod_d sin(FREQ_i * pi * u_d + PHASE_i)`. At `z = z_max`
//! the bias term is zero, so the optimum of `f_i` is exactly `c_i` and the
//! Pareto set for two objectives is the segment between the centers.

use std::sync::{Arc, OnceLock};

use crate::bench::{check_fidelity, Benchmark, Sense};
use crate::error::{PrimoError, Result};
use crate::pareto::{hypervolume_2d_pairs, ObjectiveVector, ReferencePoint};
use crate::space::{Configuration, FidelitySpec, ParamSpec, SearchSpace};

/// Per-objective bias wave constants; cycled when there are more objectives.
const FREQ: [f64; 4] = [3.0, 5.0, 7.0, 11.0];
const PHASE: [f64; 4] = [0.7, 1.3, 2.1, 2.9];

/// Grid size target for the stored best-known hypervolume.
const BEST_HV_GRID_POINTS: usize = 1_000_000;

#[derive(Debug)]
pub struct BiSphere {
    name: String,
    space: SearchSpace,
    centers: Vec<Vec<f64>>,
    bias: f64,
    offsets: Vec<f64>,
    senses: Vec<Sense>,
    reference: ReferencePoint,
    best_hv: OnceLock<f64>,
}

impl BiSphere {
    pub fn new(
        name: &str,
        centers: Vec<Vec<f64>>,
        bias: f64,
        offsets: Vec<f64>,
        z_min: u32,
        z_max: u32,
        reference: Vec<f64>,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(PrimoError::domain("sphere benchmark needs at least one center"));
        }
        let n_d = centers[0].len();
        if n_d == 0 || centers.iter().any(|c| c.len() != n_d) {
            return Err(PrimoError::domain("all centers need the same positive dimension"));
        }
        if centers.iter().any(|c| c.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(PrimoError::domain("centers must lie in the unit cube"));
        }
        for (i, a) in centers.iter().enumerate() {
            if centers[..i].contains(a) {
                return Err(PrimoError::domain("centers must be pairwise distinct"));
            }
        }
        if offsets.len() != centers.len() {
            return Err(PrimoError::domain("one offset per objective required"));
        }
        if !(bias >= 0.0) {
            return Err(PrimoError::domain(format!("bias amplitude must be >= 0, got {bias}")));
        }
        let params = (0..n_d)
            .map(|i| ParamSpec::continuous(&format!("x{i}"), 0.0, 1.0, false))
            .collect::<Result<Vec<_>>>()?;
        let space = SearchSpace::new(params, FidelitySpec::new("z", z_min, z_max)?)?;
        let senses = vec![Sense::Min; centers.len()];
        Ok(BiSphere {
            name: name.to_string(),
            space,
            centers,
            bias,
            offsets,
            senses,
            reference: ReferencePoint::new(reference)?,
            best_hv: OnceLock::new(),
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn objective(&self, i: usize, u: &[f64], fidelity_factor: f64) -> f64 {
        let dist2: f64 =
            u.iter().zip(&self.centers[i]).map(|(x, c)| (x - c) * (x - c)).sum();
        let mut value = dist2 + self.offsets[i];
        if fidelity_factor != 0.0 {
            let wave: f64 = u
                .iter()
                .map(|&x| (FREQ[i % FREQ.len()] * std::f64::consts::PI * x + PHASE[i % PHASE.len()]).sin())
                .product();
            value += self.bias * fidelity_factor * wave;
        }
        value
    }
}

impl Benchmark for BiSphere {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn n_objectives(&self) -> usize {
        self.centers.len()
    }

    fn senses(&self) -> &[Sense] {
        &self.senses
    }

    fn reference_point(&self) -> &ReferencePoint {
        &self.reference
    }

    /// Computed once by dense-grid brute force at full fidelity, then cached.
    fn best_known_hv(&self) -> Option<f64> {
        if self.n_objectives() != 2 {
            return None;
        }
        Some(*self.best_hv.get_or_init(|| {
            let n_d = self.space.n_d();
            let per_dim = (BEST_HV_GRID_POINTS as f64).powf(1.0 / n_d as f64).round() as usize;
            let mut points = Vec::with_capacity(per_dim.pow(n_d as u32));
            let mut u = vec![0.0; n_d];
            grid_walk(per_dim, &mut u, 0, &mut |u| {
                points.push((self.objective(0, u, 0.0), self.objective(1, u, 0.0)));
            });
            let r = self.reference.values();
            hypervolume_2d_pairs(&mut points, (r[0], r[1]))
        }))
    }

    fn evaluate(&self, config: &Configuration, z: u32) -> Result<ObjectiveVector> {
        check_fidelity(&self.space, z)?;
        if config.unit().len() != self.space.n_d() {
            return Err(PrimoError::domain("configuration dimension mismatch"));
        }
        let factor = 1.0 - z as f64 / self.space.z_max() as f64;
        let values: Vec<f64> =
            (0..self.n_objectives()).map(|i| self.objective(i, config.unit(), factor)).collect();
        ObjectiveVector::new(values)
    }
}

fn grid_walk(per_dim: usize, u: &mut Vec<f64>, dim: usize, visit: &mut impl FnMut(&[f64])) {
    if dim == u.len() {
        visit(u);
        return;
    }
    for i in 0..per_dim {
        u[dim] = (i as f64 + 0.5) / per_dim as f64;
        grid_walk(per_dim, u, dim + 1, visit);
    }
}

/// The four two-objective instances of the default suite plus one
/// single-objective sphere, all with fidelity range [1, 27].
pub fn default_suite() -> Vec<Arc<BiSphere>> {
    vec![
        Arc::new(instance("bisphere-2d", 2, 0.0)),
        Arc::new(instance("bisphere-2d-bias", 2, 0.5)),
        Arc::new(instance("bisphere-4d", 4, 0.0)),
        Arc::new(instance("bisphere-4d-bias", 4, 0.5)),
        Arc::new(single_sphere()),
    ]
}

pub(crate) fn builtin(name: &str) -> Option<Arc<dyn Benchmark>> {
    match name {
        "bisphere-2d" => Some(Arc::new(instance(name, 2, 0.0))),
        "bisphere-2d-bias" => Some(Arc::new(instance(name, 2, 0.5))),
        "bisphere-4d" => Some(Arc::new(instance(name, 4, 0.0))),
        "bisphere-4d-bias" => Some(Arc::new(instance(name, 4, 0.5))),
        "sphere-2d" => Some(Arc::new(single_sphere())),
        _ => None,
    }
}

fn instance(name: &str, n_d: usize, bias: f64) -> BiSphere {
    // Max squared distance to either center is 0.64 per dimension; the
    // reference point rounds that up with headroom for the bias wave.
    let reference = vec![(0.64 * n_d as f64 * 1.2 * 10.0).ceil() / 10.0; 2];
    BiSphere::new(
        name,
        vec![vec![0.2; n_d], vec![0.8; n_d]],
        bias,
        vec![0.0, 0.0],
        1,
        27,
        reference,
    )
    .expect("valid default instance")
}

fn single_sphere() -> BiSphere {
    BiSphere::new("sphere-2d", vec![vec![0.3, 0.7]], 0.5, vec![0.0], 1, 27, vec![1.5])
        .expect("valid default instance")
}
