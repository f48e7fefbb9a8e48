//! JSON scenario files and the solve pipeline built on them.
//!
//! ```json
//! {
//!   "mesh": {"generate": {"dim": 3, "counts": [2, 2, 2], "lower": [0, 0, 0], "upper": [1, 1, 1]}},
//!   "refine": [{"cells": [0]}],
//!   "regions": [{"box_min": [0.25, 0.25, 0.25], "box_max": [0.75, 0.75, 0.75], "material": 1}],
//!   "degree": 2,
//!   "wavelength": 1.0,
//!   "materials": {"0": {}, "1": {"index": [1.5, 0.0]}},
//!   "boundary": {"rules": [{"axis": 0, "value": 0.0, "kind": "incident"}], "default": "absorbing"},
//!   "incident": {"direction": [1, 0, 0], "polarization": [0, 1, 0]},
//!   "goals": [{"name": "J_P", "kind": "point_value", "point": [0.6, 0.4, 0.3], "component": "y"}]
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::maxwell_assembly::{assemble, BoundaryTagging, IncidentWave, MaterialParams, MaxwellProblem};
use crate::mesh::{MeshFile, RefineInstruction, RefinedMesh};
use crate::poly1d::PolynomialDegree;
use crate::solver_goals::{evaluate_goal, goal_errors, solve_system, GoalFunctionalSpec, Solution, StudyRow};
use crate::sparse::SolveStats;

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Generate {
        dim: usize,
        counts: Vec<usize>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Mesh JSON file, relative to the scenario file.
    File(PathBuf),
}

/// Cells whose centre lies in the box get `material`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
    pub material: u32,
}

/// Either `epsilon` or a refractive `index` (`ε = n²`); vacuum if neither.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentSpec {
    pub direction: Vec<f64>,
    pub polarization: Vec<f64>,
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

/// Refinement study: level `l` applies `per_level` `l` times to the base mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub levels: usize,
    pub reference_level: usize,
    pub per_level: Vec<RefineInstruction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mesh: MeshSource,
    #[serde(default)]
    pub refine: Vec<RefineInstruction>,
    #[serde(default)]
    pub regions: Vec<Region>,
    pub degree: u32,
    pub wavelength: f64,
    pub materials: BTreeMap<u32, MaterialSpec>,
    pub boundary: BoundaryTagging,
    #[serde(default)]
    pub incident: Option<IncidentSpec>,
    #[serde(default)]
    pub goals: Vec<GoalFunctionalSpec>,
    #[serde(default)]
    pub permutation_seed: Option<u64>,
    #[serde(default)]
    pub study: Option<StudySpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn vec3(v: &[f64], field: &str) -> Result<Vec3> {
    match v.len() {
        2 => Ok(Vec3::new(v[0], v[1], 0.0)),
        3 => Ok(Vec3::new(v[0], v[1], v[2])),
        _ => Err(Error::Config(format!("{field}: expected 2 or 3 numbers"))),
    }
}

fn arr3(v: &[f64], field: &str) -> Result<[f64; 3]> {
    let x = vec3(v, field)?;
    Ok([x.x, x.y, x.z])
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("scenario field `{}`: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.degree()?;
        self.problem()?;
        for (i, r) in self.regions.iter().enumerate() {
            arr3(&r.box_min, &format!("regions[{i}].box_min"))?;
            arr3(&r.box_max, &format!("regions[{i}].box_max"))?;
            if !self.materials.contains_key(&r.material) {
                return Err(Error::Config(format!(
                    "regions[{i}].material: no material {}",
                    r.material
                )));
            }
        }
        if !self.materials.contains_key(&0) {
            return Err(Error::Config("materials: material 0 (background) is required".into()));
        }
        if let Some(s) = &self.study {
            if s.levels == 0 || s.reference_level < s.levels {
                return Err(Error::Config(
                    "study: need levels >= 1 and reference_level >= levels".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> Result<PolynomialDegree> {
        PolynomialDegree::new(self.degree).map_err(|e| Error::Config(format!("degree: {e}")))
    }

    pub fn problem(&self) -> Result<MaxwellProblem> {
        let mut materials = BTreeMap::new();
        for (&id, m) in &self.materials {
            let field = format!("materials.{id}");
            let eps = match (m.epsilon, m.index) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(format!("{field}: give epsilon or index, not both")))
                }
                (Some(e), None) => C64::new(e[0], e[1]),
                (None, Some(n)) => C64::new(n[0], n[1]).powi(2),
                (None, None) => C64::new(1.0, 0.0),
            };
            let p = MaterialParams::new(m.mu.unwrap_or(1.0), eps, self.wavelength)
                .map_err(|e| Error::Config(format!("{field}: {e}")))?;
            materials.insert(id, p);
        }
        let incident = match &self.incident {
            None => None,
            Some(s) => Some(
                IncidentWave::new(
                    vec3(&s.direction, "incident.direction")?,
                    vec3(&s.polarization, "incident.polarization")?,
                    C64::new(s.amplitude[0], s.amplitude[1]),
                )
                .map_err(|e| Error::Config(format!("incident: {e}")))?,
            ),
        };
        Ok(MaxwellProblem {
            materials,
            incident,
            boundary: self.boundary.clone(),
        })
    }

    /// Root mesh plus the `refine` steps, without regions or permutation.
    pub fn base_mesh(&self) -> Result<RefinedMesh> {
        let mut file = match &self.mesh {
            MeshSource::Generate {
                dim,
                counts,
                lower,
                upper,
            } => {
                if counts.len() != *dim {
                    return Err(Error::Config(format!("mesh.generate.counts: expected {dim} entries")));
                }
                let mut c = [1usize; 3];
                c[..*dim].copy_from_slice(counts);
                MeshFile::brick(
                    *dim,
                    c,
                    arr3(lower, "mesh.generate.lower")?,
                    arr3(upper, "mesh.generate.upper")?,
                )?
            }
            MeshSource::File(p) => MeshFile::load(&self.base_dir.join(p))?,
        };
        file.refine.extend(self.refine.iter().cloned());
        file.build()
    }

    /// Mesh of study level `level` (level 0 is the base mesh), with regions and permutation applied.
    pub fn mesh_at_level(&self, level: usize) -> Result<RefinedMesh> {
        let mut mesh = self.base_mesh()?;
        if level > 0 {
            let study = self
                .study
                .as_ref()
                .ok_or_else(|| Error::Config("study: required for refinement levels".into()))?;
            for _ in 0..level {
                apply_refinement(&mut mesh, &study.per_level)?;
            }
        }
        self.finish_mesh(mesh)
    }

    /// Apply regions and the vertex permutation.
    pub fn finish_mesh(&self, mut mesh: RefinedMesh) -> Result<RefinedMesh> {
        for r in &self.regions {
            let (lo, hi) = (arr3(&r.box_min, "box_min")?, arr3(&r.box_max, "box_max")?);
            for c in 0..mesh.n_cells() {
                let x = mesh.cell_center(c);
                if (0..mesh.dim()).all(|a| x[a] >= lo[a] && x[a] <= hi[a]) {
                    mesh.set_material(c, r.material);
                }
            }
        }
        if let Some(seed) = self.permutation_seed {
            let perm = mesh.random_permutation(seed);
            mesh = mesh.permute_vertex_numbering(&perm)?;
        }
        Ok(mesh)
    }

    pub fn mesh(&self) -> Result<RefinedMesh> {
        self.mesh_at_level(0)
    }
}

pub fn apply_refinement(mesh: &mut RefinedMesh, steps: &[RefineInstruction]) -> Result<()> {
    for step in steps {
        match step {
            RefineInstruction::Cells { cells } => {
                mesh.refine_cells(cells)?;
            }
            RefineInstruction::Box { box_min, box_max } => {
                mesh.refine_box(arr3(box_min, "box_min")?, arr3(box_max, "box_max")?)?;
            }
            RefineInstruction::All { all } => {
                if *all {
                    mesh.refine_all()?;
                }
            }
        }
    }
    Ok(())
}

/// Result of one solve.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub disc: Discretization,
    pub solution: Solution,
    pub goals: Vec<(String, C64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub cells: usize,
    pub dofs: usize,
    pub unknowns: usize,
    pub constrained: usize,
    pub solver: SolveStats,
    pub goals: Vec<GoalRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoalRecord {
    pub name: String,
    pub re: f64,
    pub im: f64,
}

impl SolveOutput {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            cells: self.disc.mesh.n_active(),
            dofs: self.disc.n_dofs(),
            unknowns: self.disc.n_dofs() - self.disc.constraints.n_constrained(),
            constrained: self.disc.constraints.n_constrained(),
            solver: self.solution.stats,
            goals: self
                .goals
                .iter()
                .map(|(n, v)| GoalRecord {
                    name: n.clone(),
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }
}

/// Discretize, assemble, solve and evaluate the goals on `mesh`.
pub fn solve_on(cfg: &ScenarioConfig, mesh: RefinedMesh) -> Result<SolveOutput> {
    let disc = Discretization::new(mesh, cfg.degree()?)?;
    let problem = cfg.problem()?;
    let sys = assemble(&disc, &problem)?;
    let solution = solve_system(&disc, &sys)?;
    let goals = cfg
        .goals
        .iter()
        .map(|g| Ok((g.name.clone(), evaluate_goal(&disc, &solution.coefficients, g)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolveOutput { disc, solution, goals })
}

pub fn solve(cfg: &ScenarioConfig) -> Result<SolveOutput> {
    solve_on(cfg, cfg.mesh()?)
}

/// Goal errors on levels `0..levels` against `reference_level`.
pub fn run_study(cfg: &ScenarioConfig) -> Result<Vec<StudyRow>> {
    let study = cfg
        .study
        .as_ref()
        .ok_or_else(|| Error::Config("study: missing".into()))?;
    let reference = solve_on(cfg, cfg.mesh_at_level(study.reference_level)?)?;
    let ref_vals: Vec<C64> = reference.goals.iter().map(|g| g.1).collect();
    let mut rows = Vec::new();
    for level in 0..study.levels {
        let out = solve_on(cfg, cfg.mesh_at_level(level)?)?;
        let vals: Vec<C64> = out.goals.iter().map(|g| g.1).collect();
        rows.push(StudyRow {
            level,
            dofs: out.disc.n_dofs() - out.disc.constraints.n_constrained(),
            errors: goal_errors(&vals, &ref_vals),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "mesh": {"generate": {"dim": 2, "counts": [2, 2], "lower": [0, 0], "upper": [1, 1]}},
        "degree": 1,
        "wavelength": 2.0,
        "materials": {"0": {}},
        "boundary": {"default": "absorbing"}
    }"#;

    #[test]
    fn parses_minimal() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.mesh().unwrap().n_active(), 4);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("\"degree\": 1", "\"degree\": \"one\"");
        let e = ScenarioConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("degree"), "{e}");
        let bad = MINIMAL.replace("\"materials\": {\"0\": {}}", "\"materials\": {\"0\": {\"mu\": -1}}");
        let e = ScenarioConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("materials.0"), "{e}");
    }
}
