//! Tabular benchmarks: externally exported evaluation tables served through
//! nearest-neighbor lookup in normalized space.
//!
//! File format (line-delimited, versioned): the first line is a JSON header
//! with the search space, objective names/senses, reference point and an
//! optional best-known hypervolume; every following non-empty line is a JSON
//! array `[param values.., z, objective values..]`. Maximized objectives are
//! negated on load (rows and reference coordinate alike), so in memory
//! everything minimizes.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{check_fidelity, Benchmark, Sense};
use crate::error::{PrimoError, Result};
use crate::pareto::{ObjectiveVector, ReferencePoint};
use crate::space::{Configuration, SearchSpace};

pub const TABULAR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TabularHeader {
    version: u32,
    name: String,
    space: SearchSpace,
    objectives: Vec<String>,
    senses: Vec<Sense>,
    reference_point: Vec<f64>,
    #[serde(default)]
    best_known_hv: Option<f64>,
}

#[derive(Debug)]
pub struct TabularBenchmark {
    name: String,
    space: SearchSpace,
    objectives: Vec<String>,
    senses: Vec<Sense>,
    reference: ReferencePoint,
    best_known_hv: Option<f64>,
    /// Rows grouped by fidelity: (unit-space input, minimized objectives).
    rows: BTreeMap<u32, Vec<(Vec<f64>, Vec<f64>)>>,
}

/// Parses a tabular export. Schema violations report the offending row and
/// column.
pub fn load_tabular(path: &Path) -> Result<TabularBenchmark> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| PrimoError::parse(format!("{}: empty file", path.display())))??;
    let header: TabularHeader = serde_json::from_str(&header_line)
        .map_err(|e| PrimoError::parse(format!("{}: header: {e}", path.display())))?;
    if header.version != TABULAR_FORMAT_VERSION {
        return Err(PrimoError::parse(format!(
            "{}: unsupported version {} (expected {TABULAR_FORMAT_VERSION})",
            path.display(),
            header.version
        )));
    }
    let n_d = header.space.n_d();
    let n_obj = header.objectives.len();
    if n_obj == 0 || header.senses.len() != n_obj || header.reference_point.len() != n_obj {
        return Err(PrimoError::parse(format!(
            "{}: header must declare matching objectives, senses and reference point",
            path.display()
        )));
    }

    let mut rows: BTreeMap<u32, Vec<(Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let row_no = idx + 2; // 1-based, after the header
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = serde_json::from_str(&line)
            .map_err(|e| PrimoError::parse(format!("{}: row {row_no}: {e}", path.display())))?;
        let expected = n_d + 1 + n_obj;
        if values.len() != expected {
            let msg = if values.len() < expected {
                let missing = column_names(&header)[values.len()..].join(", ");
                format!("row {row_no}: {} values, expected {expected}; missing columns: {missing}", values.len())
            } else {
                format!("row {row_no}: {} values, expected {expected}", values.len())
            };
            return Err(PrimoError::parse(format!("{}: {msg}", path.display())));
        }
        let unit = header.space.normalize(&values[..n_d]).map_err(|e| {
            PrimoError::parse(format!("{}: row {row_no}: {e}", path.display()))
        })?;
        let z = values[n_d];
        if z.fract() != 0.0 || z < 1.0 {
            return Err(PrimoError::parse(format!(
                "{}: row {row_no}: column {} must be a positive integer fidelity, got {z}",
                path.display(),
                header.space.fidelity().name
            )));
        }
        let objs: Vec<f64> = values[n_d + 1..]
            .iter()
            .zip(&header.senses)
            .map(|(&v, s)| match s {
                Sense::Min => v,
                Sense::Max => -v,
            })
            .collect();
        rows.entry(z as u32).or_default().push((unit, objs));
    }
    if rows.is_empty() {
        return Err(PrimoError::parse(format!("{}: no data rows", path.display())));
    }

    let reference: Vec<f64> = header
        .reference_point
        .iter()
        .zip(&header.senses)
        .map(|(&v, s)| match s {
            Sense::Min => v,
            Sense::Max => -v,
        })
        .collect();
    Ok(TabularBenchmark {
        name: header.name,
        space: header.space,
        objectives: header.objectives,
        senses: header.senses,
        reference: ReferencePoint::new(reference)?,
        best_known_hv: header.best_known_hv,
        rows,
    })
}

fn column_names(header: &TabularHeader) -> Vec<String> {
    header
        .space
        .param_names()
        .into_iter()
        .chain([header.space.fidelity().name.clone()])
        .chain(header.objectives.iter().cloned())
        .collect()
}

impl TabularBenchmark {
    /// Fidelities present in the table, ascending.
    pub fn fidelities(&self) -> Vec<u32> {
        self.rows.keys().copied().collect()
    }

    fn group_for(&self, z: u32) -> (&Vec<(Vec<f64>, Vec<f64>)>, u32) {
        if let Some(group) = self.rows.get(&z) {
            return (group, z);
        }
        // Nearest lower fidelity; clamp up to the smallest when below range.
        if let Some((&lower, group)) = self.rows.range(..=z).next_back() {
            log::debug!("{}: fidelity {z} not tabulated, using lower rung {lower}", self.name);
            (group, lower)
        } else {
            let (&lowest, group) = self.rows.iter().next().expect("non-empty table");
            log::warn!("{}: fidelity {z} below table range, using lowest rung {lowest}", self.name);
            (group, lowest)
        }
    }
}

impl Benchmark for TabularBenchmark {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn n_objectives(&self) -> usize {
        self.objectives.len()
    }

    fn objective_names(&self) -> Vec<String> {
        self.objectives.clone()
    }

    fn senses(&self) -> &[Sense] {
        &self.senses
    }

    fn reference_point(&self) -> &ReferencePoint {
        &self.reference
    }

    fn best_known_hv(&self) -> Option<f64> {
        self.best_known_hv
    }

    fn evaluate(&self, config: &Configuration, z: u32) -> Result<ObjectiveVector> {
        check_fidelity(&self.space, z)?;
        let (group, _) = self.group_for(z);
        let (_, objs) = group
            .iter()
            .min_by(|(a, _), (b, _)| {
                let da: f64 = a.iter().zip(config.unit()).map(|(x, y)| (x - y) * (x - y)).sum();
                let db: f64 = b.iter().zip(config.unit()).map(|(x, y)| (x - y) * (x - y)).sum();
                da.partial_cmp(&db).expect("finite distances")
            })
            .expect("non-empty fidelity group");
        ObjectiveVector::new(objs.clone())
    }
}

/// Exports a benchmark on a regular unit-grid at the given fidelities.
/// Reloading serves exactly the grid values back (identity on grid points).
pub fn export_tabular(
    bench: &dyn Benchmark,
    per_dim: usize,
    fidelities: &[u32],
    out: &mut dyn Write,
) -> Result<()> {
    let header = TabularHeader {
        version: TABULAR_FORMAT_VERSION,
        name: bench.name().to_string(),
        space: bench.space().clone(),
        objectives: bench.objective_names(),
        senses: bench.senses().to_vec(),
        // Internal values are already minimized; undo the sense flip so the
        // exported file matches the declared directions.
        reference_point: bench
            .reference_point()
            .values()
            .iter()
            .zip(bench.senses())
            .map(|(&v, s)| match s {
                Sense::Min => v,
                Sense::Max => -v,
            })
            .collect(),
        best_known_hv: bench.best_known_hv(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;

    let n_d = bench.space().n_d();
    let mut u = vec![0.0; n_d];
    let mut cells: Vec<Vec<f64>> = Vec::new();
    walk(per_dim, &mut u, 0, &mut |u| cells.push(u.to_vec()));
    for unit in cells {
        let cfg = bench.space().denormalize(&unit)?;
        for &z in fidelities {
            let y = bench.evaluate(&cfg, z)?;
            let row: Vec<f64> = cfg
                .raw()
                .iter()
                .copied()
                .chain([z as f64])
                .chain(y.values().iter().zip(bench.senses()).map(|(&v, s)| match s {
                    Sense::Min => v,
                    Sense::Max => -v,
                }))
                .collect();
            writeln!(out, "{}", serde_json::to_string(&row).expect("row serializes"))?;
        }
    }
    Ok(())
}

fn walk(per_dim: usize, u: &mut Vec<f64>, dim: usize, visit: &mut impl FnMut(&[f64])) {
    if dim == u.len() {
        visit(u);
        return;
    }
    for i in 0..per_dim {
        u[dim] = (i as f64 + 0.5) / per_dim as f64;
        walk(per_dim, u, dim + 1, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::sphere::builtin;

    fn export_to_temp(per_dim: usize, fidelities: &[u32]) -> tempfile::NamedTempFile {
        let bench = builtin("bisphere-2d-bias").unwrap();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        export_tabular(bench.as_ref(), per_dim, fidelities, file.as_file_mut()).unwrap();
        file
    }

    #[test]
    fn round_trip_is_exact_on_grid_points() {
        let file = export_to_temp(7, &[1, 9, 27]);
        let table = load_tabular(file.path()).unwrap();
        let bench = builtin("bisphere-2d-bias").unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let u = vec![(i as f64 + 0.5) / 7.0, (j as f64 + 0.5) / 7.0];
                let cfg = table.space().denormalize(&u).unwrap();
                for z in [1, 9, 27] {
                    let from_table = table.evaluate(&cfg, z).unwrap();
                    let direct = bench.evaluate(&cfg, z).unwrap();
                    assert_eq!(from_table, direct);
                }
            }
        }
    }

    #[test]
    fn missing_fidelity_uses_nearest_lower_rung() {
        let file = export_to_temp(3, &[3, 9]);
        let table = load_tabular(file.path()).unwrap();
        let cfg = table.space().denormalize(&[0.5, 0.5]).unwrap();
        assert_eq!(table.evaluate(&cfg, 10).unwrap(), table.evaluate(&cfg, 9).unwrap());
        assert_eq!(table.evaluate(&cfg, 2).unwrap(), table.evaluate(&cfg, 3).unwrap());
    }

    #[test]
    fn reference_point_is_stored_verbatim() {
        let header = serde_json::json!({
            "version": 1,
            "name": "cifar-like",
            "space": {
                "params": [
                    {"name": "lr", "kind": "continuous", "lower": 1e-4, "upper": 0.1, "log_scaled": true}
                ],
                "fidelity": {"name": "epoch", "min": 1, "max": 52}
            },
            "objectives": ["valid_error_rate", "train_cost"],
            "senses": ["min", "min"],
            "reference_point": [1.0, 30.0]
        });
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file.as_file_mut(), "{header}").unwrap();
        writeln!(file.as_file_mut(), "[0.01, 1, 0.5, 3.0]").unwrap();
        let table = load_tabular(file.path()).unwrap();
        assert_eq!(table.reference_point().values(), &[1.0, 30.0]);
        assert_eq!(table.objective_names(), vec!["valid_error_rate", "train_cost"]);
    }

    #[test]
    fn maximized_objectives_are_negated_on_load() {
        let header = serde_json::json!({
            "version": 1,
            "name": "t",
            "space": {
                "params": [{"name": "x", "kind": "continuous", "lower": 0.0, "upper": 1.0, "log_scaled": false}],
                "fidelity": {"name": "z", "min": 1, "max": 2}
            },
            "objectives": ["accuracy", "cost"],
            "senses": ["max", "min"],
            "reference_point": [0.0, 10.0]
        });
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file.as_file_mut(), "{header}").unwrap();
        writeln!(file.as_file_mut(), "[0.5, 2, 0.9, 3.0]").unwrap();
        let table = load_tabular(file.path()).unwrap();
        let cfg = table.space().denormalize(&[0.5]).unwrap();
        let y = table.evaluate(&cfg, 2).unwrap();
        assert_eq!(y.values(), &[-0.9, 3.0], "accuracy negated, cost untouched");
        assert_eq!(table.reference_point().values(), &[0.0, 10.0]);
    }

    #[test]
    fn short_rows_name_the_missing_column() {
        let file = export_to_temp(3, &[27]);
        let text = std::fs::read_to_string(file.path()).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let truncated = lines[1].rsplitn(2, ',').nth(1).unwrap().to_string() + "]";
        lines[1] = &truncated;
        let mut broken = tempfile::NamedTempFile::new().unwrap();
        write!(broken.as_file_mut(), "{}", lines.join("\n")).unwrap();
        let err = load_tabular(broken.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("f2"), "names the missing objective column: {msg}");
    }

    #[test]
    fn header_errors_are_reported() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file.as_file_mut(), "not json").unwrap();
        assert!(load_tabular(file.path()).is_err());

        let mut empty = tempfile::NamedTempFile::new().unwrap();
        write!(empty.as_file_mut(), "").unwrap();
        assert!(load_tabular(empty.path()).is_err());
    }
}
