//! Turning a config into concrete laws, initial data and runs.

use congestion::brinkman_stepper::{run, Observers, StepControls, Trajectory};
use congestion::darcy_stepper::{run_darcy_with, DarcyScheme};
use congestion::field_grid::{Grid, ScalarField};
use congestion::pressure_laws::{
    incompressible_law, joint_power_law, log_law, power_law, Growth, InitialData, PressureLaw,
};

use crate::config::{DatumSpec, ExperimentConfig, LawFamily, Model, Shape};
use crate::ExperimentError;

/// One point of a parameter schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub family: LawFamily,
    /// Unused by the log and incompressible families.
    pub gamma: f64,
    pub nu: f64,
}

impl Member {
    pub fn power(gamma: f64, nu: f64) -> Self {
        Self { family: LawFamily::Power, gamma, nu }
    }

    /// Directory-safe label, unique within a schedule.
    pub fn key(&self) -> String {
        match self.family {
            LawFamily::Power => format!("gamma{}_nu{}", self.gamma, self.nu),
            LawFamily::Joint => format!("joint_nu{}", self.nu),
            LawFamily::Log => format!("log_nu{}", self.nu),
            LawFamily::Incompressible => "incompressible".to_string(),
        }
    }

    pub fn law(&self, growth: Growth) -> Result<PressureLaw, ExperimentError> {
        Ok(match self.family {
            LawFamily::Power => power_law(self.gamma, self.nu, growth)?,
            LawFamily::Joint => joint_power_law(self.nu, growth)?,
            LawFamily::Log => log_law(self.nu, growth)?,
            LawFamily::Incompressible => incompressible_law(growth)?,
        })
    }
}

/// Every combination of the law schedules, in config order.
pub fn members(config: &ExperimentConfig) -> Vec<Member> {
    let law = &config.law;
    match law.family {
        LawFamily::Power => law
            .gamma
            .iter()
            .flat_map(|&gamma| law.nu.iter().map(move |&nu| Member::power(gamma, nu)))
            .collect(),
        family => law.nu.iter().map(|&nu| Member { family, gamma: 1.0 / nu.max(f64::MIN_POSITIVE), nu }).collect(),
    }
}

/// `height (1 - |x - c|^2 / width^2)^2` inside the ball.
fn bump(grid: Grid, spec: &DatumSpec, cx: f64) -> ScalarField {
    let [_, cy] = spec.center;
    let dim = grid.dim();
    ScalarField::from_fn(grid, |x, y| {
        let r2 = (x - cx).powi(2) + if dim == 2 { (y - cy).powi(2) } else { 0.0 };
        spec.height * (1.0 - r2 / (spec.width * spec.width)).max(0.0).powi(2)
    })
}

/// Species densities of the configured shape, without the pressure level.
pub fn datum_fields(grid: Grid, spec: &DatumSpec) -> Vec<ScalarField> {
    let [cx, cy] = spec.center;
    let half = spec.separation / 2.0;
    match spec.shape {
        Shape::Bump => vec![bump(grid, spec, cx)],
        Shape::TwoBumps => {
            let (a, b) = (bump(grid, spec, cx - half), bump(grid, spec, cx + half));
            vec![a.zip_map(&b, f64::max)]
        }
        Shape::Plateau => {
            let dim = grid.dim();
            vec![ScalarField::from_fn(grid, |x, y| {
                let inside = (x - cx).abs() < spec.width && (dim == 1 || (y - cy).abs() < spec.width);
                if inside {
                    spec.height
                } else {
                    0.0
                }
            })]
        }
        Shape::TwoSpecies => vec![bump(grid, spec, cx - half), bump(grid, spec, cx + half)],
    }
}

/// Initial data on `grid`, with the pressure level defaulting to the peak
/// pressure of the datum.
pub fn initial_data(grid: Grid, spec: &DatumSpec, law: &PressureLaw) -> Result<InitialData, ExperimentError> {
    let species = datum_fields(grid, spec);
    let bound = match spec.bound {
        Some(b) => b,
        None => {
            let peak = species.iter().fold(ScalarField::zeros(grid), |acc, f| acc.zip_map(f, |a, b| a + b)).max();
            law.pressure(peak).unwrap_or(0.0)
        }
    };
    Ok(InitialData { density_per_species: species, bound_b: bound })
}

/// Integrates one member with the configured model.
pub fn run_model(
    model: Model,
    data: &InitialData,
    law: &PressureLaw,
    t_end: f64,
    controls: &StepControls,
    observers: &Observers,
) -> Result<Trajectory, ExperimentError> {
    Ok(match model {
        Model::Brinkman => run(data, law, t_end, controls, observers)?,
        Model::Darcy => run_darcy_with(data, law, t_end, controls, observers, DarcyScheme::Divergence)?,
        Model::DarcyUpwind => run_darcy_with(data, law, t_end, controls, observers, DarcyScheme::Upwind)?,
    })
}

/// Observer setting for a run that feeds the enabled diagnostics.
pub fn effective_observers(config: &ExperimentConfig) -> Observers {
    if config.diagnostics.enabled.iter().any(|k| k.needs_every_step()) {
        Observers::EveryStep
    } else {
        config.run.observers.clone()
    }
}

/// Law, data and trajectory of one member as configured.
pub fn run_member(
    config: &ExperimentConfig,
    member: &Member,
) -> Result<(PressureLaw, InitialData, Trajectory), ExperimentError> {
    let law = member.law(config.growth)?;
    let data = initial_data(config.grid, &config.initial, &law)?;
    let traj = run_model(config.run.model, &data, &law, config.run.t_end, &config.run.controls, &effective_observers(config))?;
    Ok((law, data, traj))
}
