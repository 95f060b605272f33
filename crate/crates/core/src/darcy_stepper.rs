//! Explicit integration of the `nu = 0` limit `rho_t = Lap Phi(rho) + rho G(p)`
//! with the flux potential `Phi = f* o f'`, so that `grad Phi(rho) = rho grad p`.
//!
//! The default scheme is the five-point (three-point in 1D) Laplacian of
//! `Phi(rho)`. The upwind transport of the Brinkman stepper with `w = p` is
//! available as [`DarcyScheme::Upwind`] for cross-checks and for several
//! species.

use crate::brinkman_stepper::{
    check_boundary, drive, growth_limit, step_species, Observers, SolverState, StepControls, StepError, Trajectory,
};
use crate::convex_energy::{ClosedForm, ConvexScalarFunction, NegativeSide, Tabulation};
use crate::field_grid::{laplacian, ScalarField};
use crate::pressure_laws::{validate_well_prepared, InitialData, LawError, LawKind, Normalization, PressureLaw};

/// Upper end of the tabulation window for the log-law flux potential.
const LOG_FLUX_WINDOW: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DarcyFlux {
    potential: ConvexScalarFunction,
}

impl DarcyFlux {
    pub fn potential(&self) -> &ConvexScalarFunction {
        &self.potential
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.potential.value(rho)
    }

    /// `Phi'(rho) = rho f''(rho)`.
    pub fn slope(&self, rho: f64) -> f64 {
        self.potential.derivative(rho).unwrap_or(f64::INFINITY)
    }
}

/// `Phi(a) = f*(f'(a)) = a f'(a) - f(a)`.
pub fn flux_potential(law: &PressureLaw) -> Result<DarcyFlux, LawError> {
    let potential = match law.kind() {
        LawKind::Power { gamma, normalization } => {
            let (exponent, scale) = match normalization {
                Normalization::PressureIsPower => (gamma + 1.0, gamma),
                Normalization::EnergyIsPower => (gamma, gamma - 1.0),
            };
            ClosedForm::Power { exponent, scale, negative: NegativeSide::Infinite }.into()
        }
        LawKind::Log => {
            let f = law.energy().clone();
            let phi = move |a: f64| a * f.derivative(a).unwrap_or(f64::INFINITY) - f.value(a);
            ConvexScalarFunction::tabulate(&phi, &Tabulation::on(0.0, LOG_FLUX_WINDOW), false)
                .map_err(|e| LawError::InvalidParameter(e.to_string()))?
        }
        LawKind::Incompressible => return Err(LawError::Multivalued),
    };
    Ok(DarcyFlux { potential })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DarcyScheme {
    #[default]
    Divergence,
    Upwind,
}

fn zero_viscosity(law: &PressureLaw) -> Result<PressureLaw, StepError> {
    Ok(law.clone().with_nu(0.0)?)
}

/// One divergence-form step of a single-species state, never longer than
/// `limit`.
pub fn step_darcy(
    state: &mut SolverState,
    law: &PressureLaw,
    flux: &DarcyFlux,
    controls: &StepControls,
    limit: f64,
) -> Result<f64, StepError> {
    if state.species.len() != 1 {
        return Err(StepError::Setup("the divergence-form scheme takes one species; use the upwind scheme".into()));
    }
    let law = zero_viscosity(law)?;
    let growth = law.growth();
    let rho = &state.species[0];
    let grid = *rho.grid();
    let h = grid.spacing();
    let slope = rho.values().iter().fold(0.0f64, |m, &r| m.max(flux.slope(r)));
    let parabolic = controls.cfl_fraction * h * h / (2.0 * grid.dim() as f64 * slope);
    let reaction = controls.reaction_fraction / growth_limit(state.pressure(), &[growth]);
    let dt = parabolic.min(reaction).min(controls.max_dt).min(limit);
    if !(dt >= controls.min_dt) {
        if parabolic < controls.min_dt {
            let fit = (controls.cfl_fraction / (2.0 * grid.dim() as f64 * slope * controls.min_dt)).sqrt();
            let suggested_cells = (grid.length() * fit).floor() as usize;
            return Err(StepError::StiffFlux { slope, dt, suggested_cells });
        }
        return Err(StepError::DtUnderflow { time: state.time, dt });
    }
    let phi = rho.map(|r| flux.value(r));
    let lap = laplacian(&phi);
    let mut next = ScalarField::zeros(grid);
    for (k, o) in next.values_mut().iter_mut().enumerate() {
        let r = rho.values()[k];
        *o = r * (1.0 + dt * growth.rate(state.pressure().values()[k])) + dt * lap.values()[k];
    }
    // the stencil can only undershoot by rounding; positivity holds exactly
    // in exact arithmetic under the step restriction
    for v in next.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    state.time += dt;
    let next = vec![next];
    check_boundary(&next, controls, state.time)?;
    state.replace_species(next);
    state.refresh(&law)?;
    Ok(dt)
}

/// Integrate with the divergence-form scheme.
pub fn run_darcy(
    initial: &InitialData,
    law: &PressureLaw,
    t_end: f64,
    controls: &StepControls,
    observers: &Observers,
) -> Result<Trajectory, StepError> {
    run_darcy_with(initial, law, t_end, controls, observers, DarcyScheme::Divergence)
}

pub fn run_darcy_with(
    initial: &InitialData,
    law: &PressureLaw,
    t_end: f64,
    controls: &StepControls,
    observers: &Observers,
    scheme: DarcyScheme,
) -> Result<Trajectory, StepError> {
    controls.validate()?;
    let law = zero_viscosity(law)?;
    let report = validate_well_prepared(initial, &law);
    if !report.passed() {
        return Err(StepError::NotWellPrepared(report));
    }
    let flux = flux_potential(&law)?;
    let mut state = SolverState::from_initial(initial, &law)?;
    check_boundary(state.species(), controls, 0.0)?;
    let growths = vec![law.growth(); state.species().len()];
    match scheme {
        DarcyScheme::Divergence => drive(&mut state, t_end, observers, 0.0, &growths, |s, limit| {
            step_darcy(s, &law, &flux, controls, limit)
        }),
        DarcyScheme::Upwind => drive(&mut state, t_end, observers, 0.0, &growths, |s, limit| {
            step_species(s, &law, &growths, controls, limit)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_grid::Grid;
    use crate::pressure_laws::{incompressible_law, log_law, power_law, Growth};

    fn no_growth() -> Growth {
        Growth::zero(1.0).unwrap()
    }

    #[test]
    fn flux_potential_examples() {
        let quad = flux_potential(&power_law(1.0, 0.0, no_growth()).unwrap()).unwrap();
        for r in [0.0, 0.3, 2.0] {
            assert!((quad.value(r) - r * r / 2.0).abs() < 1e-15);
        }
        let cubic = flux_potential(&power_law(3.0, 0.0, no_growth()).unwrap()).unwrap();
        assert!((cubic.value(1.0) - 0.75).abs() < 1e-15);
        assert!((cubic.slope(0.5) - 3.0 * 0.5f64.powi(3)).abs() < 1e-15);
        let log = flux_potential(&log_law(0.1, no_growth()).unwrap()).unwrap();
        assert_eq!(log.value(0.0), 0.0);
        let a: f64 = 0.5;
        let exact = 0.1 * a / (1.0 - a) + 0.1 * (1.0 - a).ln();
        assert!((log.value(a) - exact).abs() < 1e-9);
        assert!(matches!(flux_potential(&incompressible_law(no_growth()).unwrap()), Err(LawError::Multivalued)));
    }

    #[test]
    fn empty_density_is_stationary() {
        let grid = Grid::line(32, 4.0).unwrap();
        let law = power_law(2.0, 0.0, Growth::linear(1.0, 1.0).unwrap()).unwrap();
        let data = InitialData::single(ScalarField::zeros(grid), 1.0);
        let traj = run_darcy(&data, &law, 0.2, &StepControls::default(), &Observers::EveryStep).unwrap();
        assert!(traj.last().total().values().iter().all(|&v| v == 0.0));
        let none = run_darcy(&data, &law, 0.0, &StepControls::default(), &Observers::EveryStep).unwrap();
        assert_eq!(none.frames.len(), 1);
    }

    #[test]
    fn flux_identity_on_smooth_profile() {
        // grad Phi(rho) and rho grad p agree to O(h) on faces
        let law = power_law(3.0, 0.0, no_growth()).unwrap();
        let flux = flux_potential(&law).unwrap();
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let grid = Grid::line(n, 4.0).unwrap();
            let rho = ScalarField::from_fn(grid, |x, _| 0.5 + 0.3 * x.sin());
            let p = law.pressure_field(&rho).unwrap();
            let a = crate::field_grid::gradient(&rho.map(|r| flux.value(r)));
            let b = crate::field_grid::gradient(&p);
            let err: f64 = (0..n - 1)
                .map(|k| (a.x_faces()[k] - rho.values()[k] * b.x_faces()[k]).abs() * grid.spacing())
                .sum();
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 1.8 && errs[1] / errs[2] > 1.8, "{errs:?}");
    }

    #[test]
    fn mass_and_positivity() {
        let grid = Grid::line(128, 4.0).unwrap();
        let law = power_law(2.0, 0.0, no_growth()).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| if x.abs() < 0.5 { 0.8 } else { 0.0 });
        let data = InitialData::single(rho, 1.0);
        let m0 = data.mass();
        let traj = run_darcy(&data, &law, 0.2, &StepControls::default(), &Observers::Stride(100)).unwrap();
        for f in &traj.frames {
            assert!(f.total().is_nonnegative());
            assert!((f.total().integral() - m0).abs() < 1e-12 * m0);
        }
    }

    #[test]
    fn stiff_flux_suggests_coarser_grid() {
        let grid = Grid::line(64, 4.0).unwrap();
        let law = power_law(80.0, 0.0, no_growth()).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| if x.abs() < 0.5 { 1.0 } else { 0.0 });
        let data = InitialData::single(rho, 1.0);
        let controls = StepControls { min_dt: 1e-2, ..StepControls::default() };
        let err = run_darcy(&data, &law, 0.1, &controls, &Observers::EveryStep).unwrap_err();
        match err {
            StepError::StiffFlux { suggested_cells, .. } => assert!(suggested_cells < 64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn upwind_mode_matches_brinkman_at_zero_viscosity() {
        let grid = Grid::line(128, 4.0).unwrap();
        let law = power_law(2.0, 0.0, Growth::linear(1.0, 1.0).unwrap()).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| 0.7 * (1.0 - 4.0 * x * x).max(0.0).powi(2));
        let data = InitialData::single(rho, 1.0);
        let c = StepControls::default();
        let obs = Observers::Times(vec![0.1]);
        let a = run_darcy_with(&data, &law, 0.2, &c, &obs, DarcyScheme::Upwind).unwrap();
        let b = crate::brinkman_stepper::run(&data, &law, 0.2, &c, &obs).unwrap();
        assert_eq!(a.last().total(), b.last().total());
    }
}
