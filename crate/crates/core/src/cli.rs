//! Command-line front end.
//!
//! Results go to stdout as JSON lines (or the stable text formats of
//! `basis eval` and `constraints dump`); human-readable notes go to stderr.
//! Exit codes: 0 ok, 2 configuration error, 3 invariant violation, 4 solver failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::constraints::{reference_constraint_weights, ConstraintBlock};
use crate::continuity::max_tangential_jump;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{CellMap, Vec3};
use crate::mesh::{MeshFile, RefineInstruction, RefinedMesh};
use crate::nedelec_basis::NedelecElement;
use crate::orientation::{orient_mesh, CellOrientation};
use crate::poly1d::PolynomialDegree;
use crate::scenario::{self, ScenarioConfig};
use crate::solver_goals::study_csv;

#[derive(Debug, Parser)]
#[command(name = "hpnedelec", version, about = "hp-Nédélec elements with hanging nodes")]
pub struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for the vertex-numbering permutation (and random test fields).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or refine mesh files.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Per-cell edge and face orientations.
    Orient {
        #[command(subcommand)]
        action: OrientAction,
    },
    /// Evaluate one shape function.
    Basis {
        #[command(subcommand)]
        action: BasisAction,
    },
    /// Hanging-node constraint blocks.
    Constraints {
        #[command(subcommand)]
        action: ConstraintsAction,
    },
    /// Largest tangential jump of a field across all interior facets.
    CheckContinuity(ContinuityArgs),
    /// Solve the scenario.
    Solve,
    /// Goal functionals, or the refinement study if the scenario has one.
    Goals,
}

#[derive(Debug, Subcommand)]
pub enum MeshAction {
    /// Structured box mesh.
    Gen {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Cells per axis, e.g. `2,2,2`.
        #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
        counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0,0")]
        lower: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1,1,1")]
        upper: Vec<f64>,
    },
    /// Append a refinement step to a mesh file.
    Refine {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_delimiter = ',')]
        cells: Vec<usize>,
        #[arg(long)]
        all: bool,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        box_min: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        box_max: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct MeshArg {
    /// Mesh JSON file; defaults to the scenario's mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OrientAction {
    Dump(MeshArg),
}

#[derive(Debug, Subcommand)]
pub enum BasisAction {
    Eval {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        degree: u32,
        /// Shape function name such as `edge0.lowest` or `face2.t1.0.1`.
        #[arg(long)]
        name: String,
        /// Reference point.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConstraintsAction {
    Dump {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long)]
        degree: Option<u32>,
        /// Print the reference-configuration weights for `--dim` instead.
        #[arg(long)]
        canonical: bool,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
}

#[derive(Debug, Args)]
pub struct ContinuityArgs {
    #[command(flatten)]
    pub mesh: MeshArg,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Check a random conforming field instead of the scenario's solution.
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    /// Gauss points per facet direction.
    #[arg(long)]
    pub points: Option<usize>,
}

/// Parse the process arguments, run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command, writing machine-readable output to `w`.
pub fn run(cli: &Cli, w: &mut dyn std::io::Write) -> Result<()> {
    if let Some(n) = cli.threads {
        // Only the first pool configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Mesh { action } => mesh_cmd(cli, action, w),
        Command::Orient {
            action: OrientAction::Dump(m),
        } => orient_dump(cli, m, w),
        Command::Basis {
            action:
                BasisAction::Eval {
                    dim,
                    degree,
                    name,
                    point,
                },
        } => basis_eval(*dim, *degree, name, point, w),
        Command::Constraints {
            action:
                ConstraintsAction::Dump {
                    mesh,
                    degree,
                    canonical,
                    dim,
                },
        } => constraints_dump(cli, mesh, *degree, *canonical, *dim, w),
        Command::CheckContinuity(a) => check_continuity(cli, a, w),
        Command::Solve => solve_cmd(cli, w),
        Command::Goals => goals_cmd(cli, w),
    }
}

fn config(cli: &Cli) -> Result<ScenarioConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.permutation_seed = Some(s);
    }
    Ok(cfg)
}

fn load_mesh(cli: &Cli, m: &MeshArg) -> Result<RefinedMesh> {
    match &m.mesh {
        Some(p) => {
            let mut mesh = MeshFile::load(p)?.build()?;
            if let Some(s) = cli.seed {
                mesh = mesh.permute_vertex_numbering(&mesh.random_permutation(s))?;
            }
            Ok(mesh)
        }
        None => config(cli)?.mesh(),
    }
}

fn degree(cli: &Cli, given: Option<u32>) -> Result<PolynomialDegree> {
    let p = match given {
        Some(p) => p,
        None => config(cli)
            .map_err(|_| Error::Config("--degree or --config is required".into()))?
            .degree,
    };
    PolynomialDegree::new(p).map_err(|e| Error::Config(format!("degree: {e}")))
}

fn out_file(cli: &Cli, name: &str) -> Result<Option<PathBuf>> {
    match &cli.out {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Ok(Some(dir.join(name)))
        }
    }
}

fn line(w: &mut dyn std::io::Write, v: serde_json::Value) -> Result<()> {
    writeln!(w, "{v}")?;
    Ok(())
}

fn mesh_cmd(cli: &Cli, action: &MeshAction, w: &mut dyn std::io::Write) -> Result<()> {
    let file = match action {
        MeshAction::Gen {
            dim,
            counts,
            lower,
            upper,
        } => {
            let mut c = [1usize; 3];
            let mut lo = [0.0; 3];
            let mut hi = [1.0; 3];
            if counts.len() < *dim || lower.len() < *dim || upper.len() < *dim {
                return Err(Error::Config(format!(
                    "--counts, --lower and --upper need {dim} entries"
                )));
            }
            c[..*dim].copy_from_slice(&counts[..*dim]);
            lo[..*dim].copy_from_slice(&lower[..*dim]);
            hi[..*dim].copy_from_slice(&upper[..*dim]);
            MeshFile::brick(*dim, c, lo, hi)?
        }
        MeshAction::Refine {
            mesh,
            cells,
            all,
            box_min,
            box_max,
        } => {
            let mut f = MeshFile::load(mesh)?;
            let step = if *all {
                RefineInstruction::All { all: true }
            } else if !cells.is_empty() {
                RefineInstruction::Cells { cells: cells.clone() }
            } else if !box_min.is_empty() && !box_max.is_empty() {
                RefineInstruction::Box {
                    box_min: box_min.clone(),
                    box_max: box_max.clone(),
                }
            } else {
                return Err(Error::Config(
                    "mesh refine needs --cells, --all or --box-min/--box-max".into(),
                ));
            };
            f.refine.push(step);
            f
        }
    };
    let mesh = file.build()?;
    if let Some(path) = out_file(cli, "mesh.json")? {
        std::fs::write(&path, file.to_json())?;
        eprintln!("wrote {}", path.display());
    }
    line(
        w,
        json!({
            "dim": mesh.dim(),
            "vertices": mesh.vertices().len(),
            "cells": mesh.n_cells(),
            "active_cells": mesh.n_active(),
            "balanced": mesh.is_balanced(),
            "mesh": if cli.out.is_none() { serde_json::to_value(&file)? } else { serde_json::Value::Null },
        }),
    )
}

fn orient_dump(cli: &Cli, m: &MeshArg, w: &mut dyn std::io::Write) -> Result<()> {
    let mesh = load_mesh(cli, m)?;
    let orient = orient_mesh(&mesh);
    orient.check_consistency(&mesh)?;
    for c in mesh.active_cells() {
        let o: &CellOrientation = orient.get(c);
        line(
            w,
            json!({
                "cell": c,
                "vertices": mesh.cell(c).vertices,
                "edges": o.edges,
                "faces": o.faces,
            }),
        )?;
    }
    Ok(())
}

fn basis_eval(dim: usize, degree: u32, name: &str, point: &[f64], w: &mut dyn std::io::Write) -> Result<()> {
    let p = PolynomialDegree::new(degree).map_err(|e| Error::Config(format!("degree: {e}")))?;
    let el = NedelecElement::new(dim, p)?;
    let idx = el
        .find(name)
        .ok_or_else(|| Error::Config(format!("no shape function named {name}")))?;
    if point.len() != dim {
        return Err(Error::Config(format!("--point needs {dim} coordinates")));
    }
    let mut xh = Vec3::zeros();
    for (a, &v) in point.iter().enumerate() {
        xh[a] = v;
    }
    let unit: Vec<[f64; 3]> = (0..1usize << dim)
        .map(|v| [(v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64])
        .collect();
    let mp = CellMap::new(dim, &unit).at(&xh);
    let mut out = Vec::new();
    el.eval_physical(&CellOrientation::reference(dim), &xh, &mp, &mut out);
    let s = out[idx];
    writeln!(
        w,
        "{name} at ({})\nvalue {:.12e} {:.12e} {:.12e}\ncurl {:.12e} {:.12e} {:.12e}",
        point.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
        s.value.x,
        s.value.y,
        s.value.z,
        s.curl.x,
        s.curl.y,
        s.curl.z
    )?;
    Ok(())
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        let s = format!("{:.*}", (5 - e).max(0) as usize, x);
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Stable text form of one block: tag, index lists and matrix rows.
pub fn format_block(b: &ConstraintBlock) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} rows {:?} cols {:?}", b.tag, b.rows, b.cols);
    for r in 0..b.weights.nrows() {
        let row: Vec<String> = (0..b.weights.ncols()).map(|c| sig6(b.weights[(r, c)])).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
    s
}

fn constraints_dump(
    cli: &Cli,
    m: &MeshArg,
    degree_arg: Option<u32>,
    canonical: bool,
    dim: usize,
    w: &mut dyn std::io::Write,
) -> Result<()> {
    let p = degree(cli, degree_arg)?;
    if canonical {
        let c = reference_constraint_weights(dim, p)?;
        writeln!(w, "canonical dim {dim} degree {}", p.get())?;
        for b in c.blocks() {
            if !b.is_zero() {
                write!(w, "{}", format_block(&b))?;
            }
        }
        return Ok(());
    }
    let disc = Discretization::new(load_mesh(cli, m)?, p)?;
    writeln!(
        w,
        "dofs {} constrained {} interfaces {}",
        disc.n_dofs(),
        disc.constraints.n_constrained(),
        disc.constraints.interfaces.len()
    )?;
    for ic in &disc.constraints.interfaces {
        let i = &ic.interface;
        writeln!(
            w,
            "interface coarse_cell {} facet {} corners {:?}",
            i.coarse_cell, i.coarse_facet, i.corners
        )?;
        for b in &ic.blocks {
            if !b.is_zero() {
                write!(w, "{}", format_block(b))?;
            }
        }
    }
    Ok(())
}

fn check_continuity(cli: &Cli, a: &ContinuityArgs, w: &mut dyn std::io::Write) -> Result<()> {
    let (report, p, kind) = if a.random || cli.config.is_none() {
        let p = degree(cli, a.degree)?;
        let disc = Discretization::new(load_mesh(cli, &a.mesh)?, p)?;
        let u = disc.random_conforming(cli.seed.unwrap_or(0));
        let n = a.points.unwrap_or(p.as_usize() + 2);
        (max_tangential_jump(&disc, &u, n), p, "random")
    } else {
        let mut cfg = config(cli)?;
        if let Some(d) = a.degree {
            cfg.degree = d;
        }
        let mesh = match &a.mesh.mesh {
            Some(_) => load_mesh(cli, &a.mesh)?,
            None => cfg.mesh()?,
        };
        let out = scenario::solve_on(&cfg, mesh)?;
        let p = cfg.degree()?;
        let n = a.points.unwrap_or(p.as_usize() + 2);
        (
            max_tangential_jump(&out.disc, &out.solution.coefficients, n),
            p,
            "solution",
        )
    };
    let ok = report.max_jump <= a.tolerance;
    line(
        w,
        json!({
            "field": kind,
            "degree": p.get(),
            "max_jump": report.max_jump,
            "conforming_facets": report.conforming_facets,
            "hanging_facets": report.hanging_facets,
            "worst": report.worst,
            "tolerance": a.tolerance,
            "ok": ok,
        }),
    )?;
    if !ok {
        return Err(Error::Invariant(format!(
            "tangential jump {:e} exceeds {:e}",
            report.max_jump, a.tolerance
        )));
    }
    Ok(())
}

fn solve_cmd(cli: &Cli, w: &mut dyn std::io::Write) -> Result<()> {
    let cfg = config(cli)?;
    let out = scenario::solve(&cfg)?;
    let summary = out.summary();
    eprintln!(
        "solved {} unknowns ({} constrained DoFs), residual {:.2e}",
        summary.unknowns, summary.constrained, summary.solver.relative_residual
    );
    if let Some(path) = out_file(cli, "summary.json")? {
        std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    }
    if let Some(path) = out_file(cli, "solution.vtk")? {
        let text = crate::vtk::write_vtk(&out.disc, &out.solution.coefficients, out.disc.element.degree());
        std::fs::write(&path, text)?;
        eprintln!("wrote {}", path.display());
    }
    line(w, serde_json::to_value(&summary)?)
}

fn goals_cmd(cli: &Cli, w: &mut dyn std::io::Write) -> Result<()> {
    let cfg = config(cli)?;
    if cfg.goals.is_empty() {
        return Err(Error::Config("goals: the scenario defines none".into()));
    }
    if cfg.study.is_none() {
        let out = scenario::solve(&cfg)?;
        for g in out.summary().goals {
            line(w, serde_json::to_value(&g)?)?;
        }
        return Ok(());
    }
    let rows = scenario::run_study(&cfg)?;
    let names: Vec<String> = cfg.goals.iter().map(|g| g.name.clone()).collect();
    let csv = study_csv(&names, &rows);
    if let Some(path) = out_file(cli, "goals.csv")? {
        std::fs::write(&path, &csv)?;
        eprintln!("wrote {}", path.display());
    }
    for r in &rows {
        let errs: serde_json::Map<String, serde_json::Value> = names
            .iter()
            .zip(&r.errors)
            .map(|(n, e)| (format!("{n}_err"), json!(e)))
            .collect();
        line(w, json!({"level": r.level, "dofs": r.dofs, "errors": errs}))?;
    }
    Ok(())
}

/// Resolve a path relative to the crate's fixture directory.
pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
