//! Explicit finite-volume integration of the (multi-species) Brinkman
//! system `rho_t - div(rho grad w) = rho G(p)`, `-nu Lap w + w = p`, with the
//! pressure computed from the total density.
//!
//! Transport is first-order upwind on the staggered faces and time stepping
//! is forward Euler on transport and growth together, so the update of a cell
//! is `rho_i (1 + dt G - dt out_i / h) + dt/h * inflow` with a nonnegative
//! coefficient on `rho_i`.

use crate::checks::CheckReport;
use crate::field_grid::{gradient, ScalarField, VectorField};
use crate::helmholtz_solver::{HelmholtzError, HelmholtzOperator};
use crate::pressure_laws::{validate_well_prepared, Growth, InitialData, LawError, LawKind, PressureLaw};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Helmholtz(#[from] HelmholtzError),
    #[error("time step {dt:e} underflows at t={time}")]
    DtUnderflow { time: f64, dt: f64 },
    #[error("domain too small: density {value:e} near the boundary at t={time}")]
    DomainTooSmall { time: f64, value: f64 },
    #[error("flux slope {slope:e} forces dt {dt:e}; use at most {suggested_cells} cells per axis")]
    StiffFlux { slope: f64, dt: f64, suggested_cells: usize },
    #[error("invalid step controls: {0}")]
    Controls(String),
    #[error("initial data are not well prepared:\n{0}")]
    NotWellPrepared(CheckReport),
    #[error("{0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControls {
    /// Fraction of the transport (and stiffness) stability limit.
    pub cfl_fraction: f64,
    pub max_dt: f64,
    /// Bound on `dt * |G|`.
    pub reaction_fraction: f64,
    /// Width of the boundary band watched for escaping density.
    pub boundary_cells: usize,
    pub boundary_tol: f64,
    pub min_dt: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            cfl_fraction: 0.45,
            max_dt: 1e-2,
            reaction_fraction: 0.45,
            boundary_cells: 5,
            boundary_tol: 1e-10,
            min_dt: 1e-13,
        }
    }
}

impl StepControls {
    /// Positivity needs `cfl_fraction + reaction_fraction <= 1`.
    pub fn validate(&self) -> Result<(), StepError> {
        let ok = self.cfl_fraction > 0.0
            && self.cfl_fraction <= 1.0
            && self.reaction_fraction > 0.0
            && self.reaction_fraction < 1.0
            && self.cfl_fraction + self.reaction_fraction <= 1.0
            && self.max_dt > 0.0
            && self.min_dt > 0.0;
        if ok {
            Ok(())
        } else {
            Err(StepError::Controls(format!("{self:?}")))
        }
    }
}

/// Densities per species with the pressure and potential they generate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub time: f64,
    pub(crate) species: Vec<ScalarField>,
    pressure: ScalarField,
    potential: ScalarField,
}

impl SolverState {
    pub fn new(species: Vec<ScalarField>, law: &PressureLaw) -> Result<Self, StepError> {
        if species.is_empty() {
            return Err(StepError::Setup("no species".into()));
        }
        let grid = *species[0].grid();
        if species.iter().any(|s| *s.grid() != grid) {
            return Err(StepError::Setup("species live on different grids".into()));
        }
        let zero = ScalarField::zeros(grid);
        let mut s = Self { time: 0.0, species, pressure: zero.clone(), potential: zero };
        s.refresh(law)?;
        Ok(s)
    }

    pub fn from_initial(initial: &InitialData, law: &PressureLaw) -> Result<Self, StepError> {
        Self::new(initial.density_per_species.clone(), law)
    }

    pub fn species(&self) -> &[ScalarField] {
        &self.species
    }

    pub fn total(&self) -> ScalarField {
        total_density(&self.species)
    }

    pub fn pressure(&self) -> &ScalarField {
        &self.pressure
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// `-grad w` on faces.
    pub fn velocity(&self) -> VectorField {
        gradient(&self.potential).map(|g| -g)
    }

    pub fn mass(&self) -> f64 {
        self.species.iter().map(ScalarField::integral).sum()
    }

    /// Recompute pressure and potential from the densities.
    pub fn refresh(&mut self, law: &PressureLaw) -> Result<(), StepError> {
        self.pressure = pressure_from_density(&self.total(), law)?;
        self.potential = HelmholtzOperator::new(*self.pressure.grid(), law.nu())?.solve(&self.pressure)?;
        Ok(())
    }

    pub(crate) fn replace_species(&mut self, species: Vec<ScalarField>) {
        self.species = species;
    }
}

pub(crate) fn total_density(species: &[ScalarField]) -> ScalarField {
    let mut it = species.iter();
    let first = it.next().expect("at least one species").clone();
    it.fold(first, |acc, f| acc.zip_map(f, |a, b| a + b))
}

/// `p = f'(rho)` cellwise; rejects the multivalued incompressible law.
pub fn pressure_from_density(rho_total: &ScalarField, law: &PressureLaw) -> Result<ScalarField, StepError> {
    if matches!(law.kind(), LawKind::Incompressible) {
        return Err(LawError::Multivalued.into());
    }
    Ok(law.pressure_field(rho_total)?)
}

/// Largest relaxation rate `rho f''(rho)` times the potential's response.
pub(crate) fn stiffness_rate(rho: &ScalarField, law: &PressureLaw, nu: f64) -> f64 {
    let g = rho.grid();
    let h = g.spacing();
    let parabolic = 4.0 * g.dim() as f64 / (h * h);
    let response = if nu > 0.0 { (1.0 / nu).min(parabolic) } else { parabolic };
    let peak = rho.values().iter().fold(0.0f64, |m, &r| m.max(r * law.energy().second_derivative(r)));
    peak * response
}

pub(crate) fn growth_limit(pressure: &ScalarField, growths: &[Growth]) -> f64 {
    growths
        .iter()
        .flat_map(|g| pressure.values().iter().map(move |&p| g.rate(p).abs()))
        .fold(0.0, f64::max)
}

pub(crate) fn check_boundary(species: &[ScalarField], controls: &StepControls, time: f64) -> Result<(), StepError> {
    for s in species {
        let v = s.boundary_max(controls.boundary_cells);
        if v >= controls.boundary_tol {
            return Err(StepError::DomainTooSmall { time, value: v });
        }
    }
    Ok(())
}

/// Time step allowed by transport, stiffness and growth.
pub fn stable_dt(state: &SolverState, law: &PressureLaw, growths: &[Growth], controls: &StepControls) -> f64 {
    let g = state.pressure.grid();
    let h = g.spacing();
    let slope = gradient(&state.potential).max_abs();
    let transport = controls.cfl_fraction * h / (2.0 * g.dim() as f64 * slope);
    let stiff = controls.cfl_fraction / stiffness_rate(&state.total(), law, law.nu());
    let reaction = controls.reaction_fraction / growth_limit(&state.pressure, growths);
    transport.min(stiff).min(reaction).min(controls.max_dt)
}

/// One step with every species growing at `law.growth()`.
pub fn step(state: &mut SolverState, law: &PressureLaw, controls: &StepControls) -> Result<f64, StepError> {
    let growths = vec![law.growth(); state.species.len()];
    step_species(state, law, &growths, controls, f64::INFINITY)
}

/// One step with a growth law per species, never longer than `limit`.
pub fn step_species(
    state: &mut SolverState,
    law: &PressureLaw,
    growths: &[Growth],
    controls: &StepControls,
    limit: f64,
) -> Result<f64, StepError> {
    if growths.len() != state.species.len() {
        return Err(StepError::Setup(format!("{} growth laws for {} species", growths.len(), state.species.len())));
    }
    let dt = stable_dt(state, law, growths, controls).min(limit);
    if !(dt >= controls.min_dt) {
        return Err(StepError::DtUnderflow { time: state.time, dt });
    }
    let velocity = state.velocity();
    let grid = *state.pressure.grid();
    let lambda = dt / grid.spacing();
    let outflow = outflow_speeds(&velocity);
    let next: Vec<ScalarField> = state
        .species
        .iter()
        .zip(growths)
        .map(|(rho, growth)| {
            let mut out = ScalarField::zeros(grid);
            let inflow = inflow(rho, &velocity);
            for (k, o) in out.values_mut().iter_mut().enumerate() {
                let coef = 1.0 + dt * growth.rate(state.pressure.values()[k]) - lambda * outflow[k];
                *o = rho.values()[k] * coef + lambda * inflow[k];
            }
            out
        })
        .collect();
    state.time += dt;
    check_boundary(&next, controls, state.time)?;
    state.replace_species(next);
    state.refresh(law)?;
    Ok(dt)
}

/// Sum of outgoing face speeds per cell.
fn outflow_speeds(v: &VectorField) -> Vec<f64> {
    let g = *v.grid();
    let n = g.cells_per_axis();
    let mut out = vec![0.0; g.len()];
    let mut axis = |faces: &[f64], stride: usize| {
        for (k, &s) in faces.iter().enumerate() {
            let (i, j) = g.unflatten(k);
            let idx = if stride == 1 { i } else { j };
            let Some(nb) = g.neighbour(idx) else { continue };
            let other = k - idx * stride + nb * stride;
            if s > 0.0 {
                out[k] += s;
            } else if s < 0.0 {
                out[other] -= s;
            }
        }
    };
    axis(v.x_faces(), 1);
    if g.dim() == 2 {
        axis(v.y_faces(), n);
    }
    out
}

/// Upwind mass entering each cell per unit `dt / h`.
fn inflow(rho: &ScalarField, v: &VectorField) -> Vec<f64> {
    let g = *v.grid();
    let n = g.cells_per_axis();
    let r = rho.values();
    let mut out = vec![0.0; g.len()];
    let mut axis = |faces: &[f64], stride: usize| {
        for (k, &s) in faces.iter().enumerate() {
            let (i, j) = g.unflatten(k);
            let idx = if stride == 1 { i } else { j };
            let Some(nb) = g.neighbour(idx) else { continue };
            let other = k - idx * stride + nb * stride;
            if s > 0.0 {
                out[other] += s * r[k];
            } else if s < 0.0 {
                out[k] -= s * r[other];
            }
        }
    };
    axis(v.x_faces(), 1);
    if g.dim() == 2 {
        axis(v.y_faces(), n);
    }
    out
}

/// Snapshot of a trajectory; `dt` is the time to the next frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub dt: f64,
    pub species: Vec<ScalarField>,
    pub pressure: ScalarField,
    pub potential: ScalarField,
}

impl Frame {
    fn capture(state: &SolverState) -> Self {
        Self {
            time: state.time,
            dt: 0.0,
            species: state.species.clone(),
            pressure: state.pressure.clone(),
            potential: state.potential.clone(),
        }
    }

    pub fn total(&self) -> ScalarField {
        total_density(&self.species)
    }
}

/// Which steps become frames.
#[derive(Debug, Clone, PartialEq)]
pub enum Observers {
    EveryStep,
    /// Every `k`-th step plus the requested end time.
    Stride(usize),
    /// The run lands exactly on each listed time.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub nu: f64,
    pub steps: usize,
    /// Largest `|dM - dt int rho G| / max(M, 1)` over the steps.
    pub mass_defect: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("trajectory has a frame")
    }

    pub fn first(&self) -> &Frame {
        &self.frames[0]
    }

    /// Frame whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> &Frame {
        let k = self.frames.partition_point(|f| f.time < t);
        match (k.checked_sub(1).map(|i| &self.frames[i]), self.frames.get(k)) {
            (Some(a), Some(b)) if t - a.time <= b.time - t => a,
            (_, Some(b)) => b,
            (Some(a), None) => a,
            (None, None) => panic!("trajectory has no frames"),
        }
    }
}

/// Integrate to time `t_end`, recording frames per `observers`.
pub fn run(
    initial: &InitialData,
    law: &PressureLaw,
    t_end: f64,
    controls: &StepControls,
    observers: &Observers,
) -> Result<Trajectory, StepError> {
    let growths = vec![law.growth(); initial.density_per_species.len()];
    run_species(initial, law, &growths, t_end, controls, observers)
}

pub fn run_species(
    initial: &InitialData,
    law: &PressureLaw,
    growths: &[Growth],
    t_end: f64,
    controls: &StepControls,
    observers: &Observers,
) -> Result<Trajectory, StepError> {
    controls.validate()?;
    let report = validate_well_prepared(initial, law);
    if !report.passed() {
        return Err(StepError::NotWellPrepared(report));
    }
    let mut state = SolverState::from_initial(initial, law)?;
    check_boundary(&state.species, controls, 0.0)?;
    drive(&mut state, t_end, observers, law.nu(), growths, |s, limit| step_species(s, law, growths, controls, limit))
}

fn growth_integral(state: &SolverState, growths: &[Growth]) -> f64 {
    state
        .species
        .iter()
        .zip(growths)
        .map(|(rho, g)| rho.inner(&state.pressure.map(|p| g.rate(p))))
        .sum()
}

/// Shared time loop for the Brinkman and Darcy steppers.
pub(crate) fn drive(
    state: &mut SolverState,
    t_end: f64,
    observers: &Observers,
    nu: f64,
    growths: &[Growth],
    mut advance: impl FnMut(&mut SolverState, f64) -> Result<f64, StepError>,
) -> Result<Trajectory, StepError> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(StepError::Setup(format!("bad horizon {t_end}")));
    }
    let mut stops: Vec<f64> = match observers {
        Observers::Times(ts) => ts.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect(),
        _ => Vec::new(),
    };
    stops.sort_by(f64::total_cmp);
    stops.push(t_end);
    let stride = match observers {
        Observers::EveryStep => 1,
        Observers::Stride(k) => (*k).max(1),
        Observers::Times(_) => usize::MAX,
    };
    let mut frames = vec![Frame::capture(state)];
    let mut steps = 0usize;
    let mut mass_defect: f64 = 0.0;
    let snap = 1e-12 * t_end.max(1.0);
    for &stop in &stops {
        while state.time < stop {
            let mass_before = state.mass();
            let growth_before = growth_integral(state, growths);
            let remaining = stop - state.time;
            let dt = advance(state, remaining)?;
            let landed = (stop - state.time).abs() <= snap;
            if landed {
                state.time = stop;
            }
            steps += 1;
            let defect = (state.mass() - mass_before - dt * growth_before).abs() / mass_before.max(1.0);
            mass_defect = mass_defect.max(defect);
            let observed = match observers {
                Observers::Times(_) => landed,
                _ => steps.is_multiple_of(stride) || (landed && stop == t_end),
            };
            if observed {
                frames.push(Frame::capture(state));
            }
        }
    }
    if frames.last().map(|f| f.time) != Some(state.time) {
        frames.push(Frame::capture(state));
    }
    for k in 0..frames.len() - 1 {
        frames[k].dt = frames[k + 1].time - frames[k].time;
    }
    Ok(Trajectory { frames, nu, steps, mass_defect })
}

#[cfg(test)]
mod tests;
