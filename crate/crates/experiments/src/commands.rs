//! The `run`, `diagnose` and `convergence` commands.
//!
//! Members of a schedule run on the rayon pool of the caller; results are
//! collected in schedule order before anything is written.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use congestion::brinkman_stepper::{Observers, Trajectory};
use congestion::checks::CheckReport;
use congestion::diagnostics::{
    bound_monitor, complementarity_residual, derivative_budget, flux_swap_error, h1_energy_report,
    internal_energy_report, power_entropy_report, singular_mass, velocity_gap, BoundTolerances, DissipationReport,
    PowerOrder, TestFunction, TimeWeight,
};
use congestion::field_grid::{restrict, ScalarField};
use congestion::pressure_laws::{InitialData, PressureLaw};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{DiagnosticKind, ExperimentConfig, LawFamily, Model};
use crate::rates::RateTable;
use crate::scenario::{initial_data, members, run_member, run_model, Member};
use crate::store::{encode_trajectory, frame_csv, read_trajectory, summary_csv, write_file};
use crate::svg::{emit_svg, Plot, Series};
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct MemberRun {
    pub key: String,
    pub dir: PathBuf,
    pub steps: usize,
    pub frames: usize,
    pub bounds: CheckReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub members: Vec<MemberRun>,
    /// Whether the bound monitor counts towards [`Self::passed`].
    pub checked: bool,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        !self.checked || self.members.iter().all(|m| m.bounds.passed())
    }
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::Brinkman => "brinkman",
        Model::Darcy => "darcy",
        Model::DarcyUpwind => "darcy-upwind",
    }
}

fn family_name(family: LawFamily) -> &'static str {
    match family {
        LawFamily::Power => "power",
        LawFamily::Log => "log",
        LawFamily::Joint => "joint",
        LawFamily::Incompressible => "incompressible",
    }
}

fn manifest(config: &ExperimentConfig, member: &Member, data: &InitialData, traj: &Trajectory) -> String {
    let g = config.grid;
    let value = json!({
        "format": "congestion-run/1",
        "scenario": config.scenario,
        "model": model_name(config.run.model),
        "law": { "family": family_name(member.family), "gamma": member.gamma, "nu": member.nu },
        "grid": {
            "dim": g.dim(),
            "cells": g.cells_per_axis(),
            "length": g.length(),
            "boundary": format!("{:?}", g.boundary()).to_lowercase(),
        },
        "species": data.density_per_species.len(),
        "bound_b": data.bound_b,
        "t_end": config.run.t_end,
        "steps": traj.steps,
        "frames": traj.frames.len(),
        "mass_defect": traj.mass_defect,
        "files": ["bounds.csv", "final.csv", "summary.csv", "trajectory.bin"],
    });
    let mut text = serde_json::to_string_pretty(&value).expect("json value");
    text.push('\n');
    text
}

fn run_one(config: &ExperimentConfig, member: &Member) -> Result<MemberRun, ExperimentError> {
    let (law, data, traj) = run_member(config, member)?;
    let dir = config.output.join(member.key());
    let bounds = bound_monitor(&traj, &law, &data, &BoundTolerances::default())?;
    write_file(&dir.join("trajectory.bin"), encode_trajectory(&traj))?;
    write_file(&dir.join("summary.csv"), summary_csv(&traj))?;
    write_file(&dir.join("final.csv"), frame_csv(traj.last()))?;
    write_file(&dir.join("bounds.csv"), bounds.to_csv())?;
    write_file(&dir.join("manifest.json"), manifest(config, member, &data, &traj))?;
    Ok(MemberRun { key: member.key(), dir, steps: traj.steps, frames: traj.frames.len(), bounds })
}

/// Runs every member and writes one directory per member under the output
/// directory, plus an index `run.json`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    let list = members(config);
    let runs: Vec<MemberRun> = list.par_iter().map(|m| run_one(config, m)).collect::<Result<_, _>>()?;
    let index = json!({
        "scenario": config.scenario,
        "members": runs.iter().map(|r| r.key.clone()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&index).expect("json value");
    text.push('\n');
    write_file(&config.output.join("run.json"), text)?;
    Ok(RunOutcome { members: runs, checked: config.diagnostics.enabled.contains(&DiagnosticKind::Bounds) })
}

/// Outcome of one diagnostic on one member.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub kind: DiagnosticKind,
    pub checks: CheckReport,
    pub report: Option<DissipationReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberDiagnosis {
    pub key: String,
    pub diagnoses: Vec<Diagnosis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOutcome {
    pub members: Vec<MemberDiagnosis>,
}

impl DiagnoseOutcome {
    pub fn passed(&self) -> bool {
        self.members.iter().all(|m| m.diagnoses.iter().all(|d| d.checks.passed()))
    }
}

fn balance(report: DissipationReport, tol: f64) -> (CheckReport, Option<DissipationReport>) {
    let mut checks = report.checks.clone();
    checks.at_most("normalized_residual", report.normalized_residual(), tol);
    (checks, Some(report))
}

fn diagnose_one(
    config: &ExperimentConfig,
    kind: DiagnosticKind,
    law: &PressureLaw,
    data: &InitialData,
    traj: &Trajectory,
) -> Result<Diagnosis, ExperimentError> {
    let spec = &config.diagnostics;
    let psi = TestFunction::standard(config.run.t_end, spec.psi_radius);
    let tol = spec.residual_tol;
    let (checks, report) = match kind {
        DiagnosticKind::Bounds => (bound_monitor(traj, law, data, &BoundTolerances::default())?, None),
        DiagnosticKind::Internal => balance(internal_energy_report(traj, law, TimeWeight::Constant)?, tol),
        DiagnosticKind::H1 => balance(h1_energy_report(traj, law, TimeWeight::Constant)?, tol),
        DiagnosticKind::Power => balance(power_entropy_report(traj, law, PowerOrder::Power(spec.power_order))?, tol),
        DiagnosticKind::Entropy => balance(power_entropy_report(traj, law, PowerOrder::Entropy)?, tol),
        DiagnosticKind::Budget => {
            let r = derivative_budget(traj, &psi, spec.budget_constant)?;
            (r.checks.clone(), Some(r))
        }
        DiagnosticKind::Complementarity => {
            let c = complementarity_residual(traj, law, spec.v_p, spec.margin * law.p_h())?;
            let mut r = CheckReport::new();
            r.info("l1", c.l1).info("linf", c.linf).info("cells", c.cells as f64);
            r.info("inequality_violation", c.inequality_violation);
            r.info("advisory", if c.advisory { 1.0 } else { 0.0 });
            (r, None)
        }
        DiagnosticKind::SingularMass => {
            let mut r = CheckReport::new();
            for &w in &spec.level_widths {
                let set = [(spec.level_center - w / 2.0, spec.level_center + w / 2.0)];
                r.info(&format!("ratio_width_{w}"), singular_mass(traj, &set, 0.0)?.ratio);
            }
            (r, None)
        }
        DiagnosticKind::FluxSwap => {
            let s = flux_swap_error(traj, law, &psi, spec.flux_delta)?;
            let mut r = CheckReport::new();
            r.at_most("total", s.total, s.bound * (1.0 + 1e-9));
            r.info("i1", s.i1).info("i2", s.i2).info("delta", s.delta);
            (r, None)
        }
    };
    Ok(Diagnosis { kind, checks, report })
}

fn diagnosis_csv(diagnoses: &[Diagnosis]) -> String {
    let mut out = String::from("diagnostic,name,value,limit,pass\n");
    for d in diagnoses {
        if let Some(r) = &d.report {
            for t in &r.terms {
                let _ = writeln!(out, "{},{},{},,", d.kind.name(), t.name, t.value);
            }
            for (name, v) in [("lhs", r.lhs), ("rhs", r.rhs), ("residual", r.residual)] {
                let _ = writeln!(out, "{},{name},{v},,", d.kind.name());
            }
        }
        for e in &d.checks.entries {
            let (limit, pass) = if e.limit.is_nan() { (String::new(), String::new()) } else { (e.limit.to_string(), e.pass.to_string()) };
            let _ = writeln!(out, "{},{},{},{limit},{pass}", d.kind.name(), e.name, e.value);
        }
    }
    out
}

/// Evaluates the enabled diagnostics on the trajectories stored under
/// `dir` by [`cmd_run`] and writes `diagnostics.csv` next to each.
pub fn cmd_diagnose(config: &ExperimentConfig, dir: &Path) -> Result<DiagnoseOutcome, ExperimentError> {
    let list = members(config);
    let results: Vec<MemberDiagnosis> = list
        .par_iter()
        .map(|m| {
            let mdir = dir.join(m.key());
            let traj = read_trajectory(&mdir)?;
            let law = m.law(config.growth)?;
            let data = initial_data(config.grid, &config.initial, &law)?;
            let every_step = traj.frames.len() == traj.steps + 1;
            let mut diagnoses = Vec::new();
            for &kind in &config.diagnostics.enabled {
                if kind.needs_every_step() && !every_step {
                    return Err(ExperimentError::Usage(format!(
                        "{}: `{}` needs every step recorded; rerun with these diagnostics enabled",
                        mdir.display(),
                        kind.name()
                    )));
                }
                diagnoses.push(diagnose_one(config, kind, &law, &data, &traj)?);
            }
            write_file(&mdir.join("diagnostics.csv"), diagnosis_csv(&diagnoses))?;
            Ok(MemberDiagnosis { key: m.key(), diagnoses })
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(DiagnoseOutcome { members: results })
}

/// Final-time densities of the two routes to the incompressible Darcy limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramCheck {
    /// Smallest viscosity of the joint schedule.
    pub nu: f64,
    pub reference_gamma: f64,
    pub l1: f64,
    pub relative: f64,
    pub tol: f64,
}

impl DiagramCheck {
    pub fn passed(&self) -> bool {
        self.relative <= self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOutcome {
    pub tables: Vec<RateTable>,
    pub diagram: Option<DiagramCheck>,
}

impl ConvergenceOutcome {
    pub fn passed(&self) -> bool {
        self.diagram.is_none_or(|d| d.passed())
    }

    pub fn table(&self, arm: &str) -> Option<&RateTable> {
        self.tables.iter().find(|t| t.arm == arm)
    }
}

pub const RATE_COLUMNS: [&str; 4] = ["velocity_gap", "flux_gap", "flux_swap", "pressure_l2"];

/// Space-time `L^2` distance of the pressures, sampling the reference at
/// the nearest frame on the coarser grid.
fn pressure_gap(traj: &Trajectory, reference: &Trajectory) -> Result<f64, ExperimentError> {
    let (ga, gb) = (*traj.first().pressure.grid(), *reference.first().pressure.grid());
    let common = if ga.cells_per_axis() <= gb.cells_per_axis() { ga } else { gb };
    let mut sum = 0.0;
    for f in traj.frames.iter().filter(|f| f.dt > 0.0) {
        let r = reference.nearest(f.time);
        let a = restrict(&f.pressure, common).map_err(|e| ExperimentError::Usage(e.to_string()))?;
        let b = restrict(&r.pressure, common).map_err(|e| ExperimentError::Usage(e.to_string()))?;
        sum += f.dt * a.zip_map(&b, |x, y| (x - y).powi(2)).integral();
    }
    Ok(sum.sqrt())
}

fn coarse_density(a: &ScalarField, b: &ScalarField) -> Result<(ScalarField, ScalarField), ExperimentError> {
    let common = if a.grid().cells_per_axis() <= b.grid().cells_per_axis() { *a.grid() } else { *b.grid() };
    let bad = |e: congestion::field_grid::GridError| ExperimentError::Usage(e.to_string());
    Ok((restrict(a, common).map_err(bad)?, restrict(b, common).map_err(bad)?))
}

struct Reference {
    law: PressureLaw,
    traj: Trajectory,
}

fn sample_times(config: &ExperimentConfig) -> Observers {
    let (t, n) = (config.run.t_end, config.sweep.samples);
    Observers::Times((1..=n).map(|k| t * k as f64 / n as f64).collect())
}

fn reference_run(config: &ExperimentConfig, gamma: f64, cells: usize) -> Result<Reference, ExperimentError> {
    let law = Member::power(gamma, 0.0).law(config.growth)?;
    let grid = config.grid.refined(cells).map_err(|e| ExperimentError::Usage(e.to_string()))?;
    let data = initial_data(grid, &config.initial, &law)?;
    let traj = run_model(Model::DarcyUpwind, &data, &law, config.run.t_end, &config.run.controls, &sample_times(config))?;
    Ok(Reference { law, traj })
}

fn arm_row(
    config: &ExperimentConfig,
    member: &Member,
    reference: &Reference,
) -> Result<(Vec<f64>, Trajectory), ExperimentError> {
    let law = member.law(config.growth)?;
    let data = initial_data(config.grid, &config.initial, &law)?;
    let traj = run_model(Model::Brinkman, &data, &law, config.run.t_end, &config.run.controls, &sample_times(config))?;
    let gap = velocity_gap(&traj, &law, &reference.traj, &reference.law, 0.0)?;
    let psi = TestFunction::standard(config.run.t_end, config.diagnostics.psi_radius);
    let swap = flux_swap_error(&traj, &law, &psi, config.diagnostics.flux_delta)?;
    let p = pressure_gap(&traj, &reference.traj)?;
    Ok((vec![gap.gradient, gap.flux, swap.total, p], traj))
}

fn arm_plot(table: &RateTable, envelope: bool) -> Plot {
    let xs: Vec<f64> = table.rows.iter().map(|r| r.parameter).collect();
    let mut series: Vec<Series> = table
        .columns
        .iter()
        .map(|c| Series::new(c, xs.iter().copied().zip(table.column(c).expect("column")).collect()))
        .collect();
    if envelope {
        // nu^(1/6) through the largest-parameter flux-swap value
        if let (Some(first), Some(swap)) = (table.rows.first(), table.column("flux_swap")) {
            let c = swap[0] / first.parameter.powf(1.0 / 6.0);
            let pts = xs.iter().map(|&x| (x, c * x.powf(1.0 / 6.0))).collect();
            series.push(Series::reference("nu^(1/6) envelope", pts));
        }
    }
    Plot {
        title: format!("{} arm", table.arm),
        x_label: table.parameter.clone(),
        y_label: "error".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

/// Runs each configured sweep arm against its reference, fits rates and
/// writes tables and plots under `<output>/convergence`.
pub fn cmd_convergence(config: &ExperimentConfig) -> Result<ConvergenceOutcome, ExperimentError> {
    let sweep = &config.sweep;
    if sweep.nu.is_empty() && sweep.gamma.is_empty() && sweep.joint.is_empty() {
        return Err(ExperimentError::Usage("convergence needs a nonempty sweep.nu, sweep.gamma or sweep.joint".into()));
    }
    if config.law.family != LawFamily::Power && !(sweep.nu.is_empty() && sweep.gamma.is_empty()) {
        return Err(ExperimentError::Usage("the nu and gamma arms need law.family = \"power\"".into()));
    }
    let gamma0 = config.law.gamma.first().copied().unwrap_or(sweep.reference_gamma);
    let nu0 = config.law.nu[0];
    let ref_cells = sweep.reference_cells.unwrap_or(config.grid.cells_per_axis());
    let mut arms: Vec<(&str, &str, Vec<(f64, Member)>, bool)> = Vec::new();
    if !sweep.nu.is_empty() {
        arms.push(("nu", "nu", sweep.nu.iter().map(|&nu| (nu, Member::power(gamma0, nu))).collect(), false));
    }
    if !sweep.gamma.is_empty() {
        arms.push(("gamma", "inv_gamma", sweep.gamma.iter().map(|&g| (1.0 / g, Member::power(g, nu0))).collect(), true));
    }
    if !sweep.joint.is_empty() {
        let family = LawFamily::Joint;
        let pts = sweep.joint.iter().map(|&nu| (nu, Member { family, gamma: 1.0 / nu, nu })).collect();
        arms.push(("joint", "nu", pts, true));
    }
    let same_grid = [(gamma0, config.grid.cells_per_axis())];
    let proxy = [(sweep.reference_gamma, ref_cells)];
    let needs_proxy = arms.iter().any(|a| a.3);
    let wanted: Vec<(f64, usize)> = same_grid
        .iter()
        .filter(|_| !sweep.nu.is_empty())
        .chain(proxy.iter().filter(|_| needs_proxy))
        .copied()
        .collect();
    let references: Vec<Reference> =
        wanted.par_iter().map(|&(g, n)| reference_run(config, g, n)).collect::<Result<_, _>>()?;
    let reference_for = |uses_proxy: bool| -> &Reference {
        if uses_proxy {
            references.last().expect("proxy reference")
        } else {
            &references[0]
        }
    };

    let dir = config.output.join("convergence");
    let mut tables = Vec::new();
    let mut diagram = None;
    for (arm, parameter, points, uses_proxy) in &arms {
        let reference = reference_for(*uses_proxy);
        let rows: Vec<(Vec<f64>, Trajectory)> =
            points.par_iter().map(|(_, m)| arm_row(config, m, reference)).collect::<Result<_, _>>()?;
        let mut table = RateTable::new(arm, parameter, &RATE_COLUMNS);
        for ((x, _), (values, _)) in points.iter().zip(&rows) {
            table.push(*x, values.clone());
        }
        if *arm == "joint" {
            let (k, _) = points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .expect("nonempty joint arm");
            let (a, b) = coarse_density(&rows[k].1.last().total(), &reference.traj.last().total())?;
            let l1 = a.zip_map(&b, |x, y| x - y).l1_norm();
            let norm = b.l1_norm();
            diagram = Some(DiagramCheck {
                nu: points[k].0,
                reference_gamma: sweep.reference_gamma,
                l1,
                relative: if norm > 0.0 { l1 / norm } else { l1 },
                tol: sweep.diagram_tol,
            });
        }
        write_file(&dir.join(format!("{arm}_rates.csv")), table.to_csv())?;
        write_file(&dir.join(format!("{arm}_fits.csv")), table.fits_csv())?;
        emit_svg(&dir.join(format!("{arm}.svg")), &arm_plot(&table, *arm != "gamma"))?;
        tables.push(table);
    }
    if let Some(d) = &diagram {
        let text = format!(
            "nu,reference_gamma,l1,relative,tol,pass\n{},{},{},{},{},{}\n",
            d.nu,
            d.reference_gamma,
            d.l1,
            d.relative,
            d.tol,
            d.passed()
        );
        write_file(&dir.join("diagram.csv"), text)?;
    }
    Ok(ConvergenceOutcome { tables, diagram })
}
