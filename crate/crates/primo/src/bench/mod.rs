//! Multi-fidelity benchmark problems.
//!
//! The shipped suite is synthetic (sphere-family objectives with a known
//! optimum and a controllable fidelity bias); externally exported tables can
//! be plugged in through the tabular loader.

mod sphere;
mod tabular;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PrimoError, Result};
use crate::pareto::{ObjectiveVector, ReferencePoint};
use crate::space::{Configuration, SearchSpace};

pub use sphere::{default_suite, BiSphere};
pub use tabular::{export_tabular, load_tabular, TabularBenchmark};

/// Direction of an objective as declared by the problem; maximized objectives
/// are negated at this boundary so the rest of the stack only minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// A deterministic multi-fidelity problem: same `(config, z)` in, same
/// objective vector out. Values at `z = z_max` define the true objectives.
pub trait Benchmark: Send + Sync {
    fn name(&self) -> &str;
    fn space(&self) -> &SearchSpace;
    fn n_objectives(&self) -> usize;
    fn objective_names(&self) -> Vec<String> {
        (0..self.n_objectives()).map(|i| format!("f{}", i + 1)).collect()
    }
    fn senses(&self) -> &[Sense];
    fn reference_point(&self) -> &ReferencePoint;
    /// Best known hypervolume at full fidelity, when available.
    fn best_known_hv(&self) -> Option<f64>;
    fn evaluate(&self, config: &Configuration, z: u32) -> Result<ObjectiveVector>;
}

pub fn builtin_names() -> Vec<&'static str> {
    vec!["bisphere-2d", "bisphere-2d-bias", "bisphere-4d", "bisphere-4d-bias", "sphere-2d"]
}

/// Resolves a builtin benchmark name or a path to a tabular export.
pub fn load_benchmark(name_or_path: &str) -> Result<Arc<dyn Benchmark>> {
    if let Some(bench) = sphere::builtin(name_or_path) {
        return Ok(bench);
    }
    let path = std::path::Path::new(name_or_path);
    if path.exists() {
        return Ok(Arc::new(load_tabular(path)?));
    }
    Err(PrimoError::Missing(format!(
        "unknown benchmark '{name_or_path}' (builtins: {}; or pass a tabular file path)",
        builtin_names().join(", ")
    )))
}

pub(crate) fn check_fidelity(space: &SearchSpace, z: u32) -> Result<()> {
    if z < space.z_min() || z > space.z_max() {
        return Err(PrimoError::domain(format!(
            "fidelity {z} outside [{}, {}]",
            space.z_min(),
            space.z_max()
        )));
    }
    Ok(())
}
