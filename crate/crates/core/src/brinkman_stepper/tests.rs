use super::*;
use crate::field_grid::{Boundary, Grid};
use crate::pressure_laws::{log_law, power_law};

fn growth() -> Growth {
    Growth::linear(1.0, 1.0).unwrap()
}

fn bump(grid: Grid, height: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        let r2 = (x * x + y * y) / 0.25;
        if r2 < 1.0 {
            height * (1.0 - r2).powi(2)
        } else {
            0.0
        }
    })
}

#[test]
fn empty_density_stays_empty() {
    let grid = Grid::line(64, 4.0).unwrap();
    let law = power_law(2.0, 0.1, growth()).unwrap();
    let data = InitialData::single(ScalarField::zeros(grid), 1.0);
    let traj = run(&data, &law, 0.5, &StepControls::default(), &Observers::EveryStep).unwrap();
    assert!(traj.last().total().values().iter().all(|&v| v == 0.0));
    assert!((traj.last().time - 0.5).abs() < 1e-15);
}

#[test]
fn uniform_state_without_growth_is_stationary() {
    for boundary in [Boundary::Neumann, Boundary::Periodic] {
        let grid = Grid::new(1, 32, 2.0, boundary).unwrap();
        let law = power_law(2.0, 0.1, Growth::zero(1.0).unwrap()).unwrap();
        let mut state = SolverState::new(vec![ScalarField::constant(grid, 0.5)], &law).unwrap();
        let controls = StepControls { boundary_tol: f64::INFINITY, ..StepControls::default() };
        for _ in 0..20 {
            step(&mut state, &law, &controls).unwrap();
        }
        for v in state.total().values() {
            assert!((v - 0.5).abs() < 1e-12, "{boundary:?} {v}");
        }
    }
}

#[test]
fn mass_conserved_without_growth() {
    let grid = Grid::line(128, 4.0).unwrap();
    let law = power_law(3.0, 0.05, Growth::zero(1.0).unwrap()).unwrap();
    let data = InitialData::single(bump(grid, 0.9), 1.0);
    let m0 = data.mass();
    let traj = run(&data, &law, 0.3, &StepControls::default(), &Observers::Stride(50)).unwrap();
    for f in &traj.frames {
        assert!((f.total().integral() - m0).abs() <= 1e-12 * m0);
        assert!(f.total().is_nonnegative());
    }
    assert!(traj.mass_defect < 1e-13);
}

#[test]
fn zero_horizon_returns_initial_frame() {
    let grid = Grid::line(32, 4.0).unwrap();
    let law = power_law(2.0, 0.1, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.5), 1.0);
    let traj = run(&data, &law, 0.0, &StepControls::default(), &Observers::EveryStep).unwrap();
    assert_eq!(traj.frames.len(), 1);
    assert_eq!(traj.steps, 0);
    assert_eq!(traj.first().species[0], data.density_per_species[0]);
}

#[test]
fn species_split_matches_total() {
    let grid = Grid::line(128, 4.0).unwrap();
    let law = power_law(2.0, 0.05, growth()).unwrap();
    let rho = bump(grid, 0.8);
    let left = ScalarField::from_fn(grid, |x, _| if x < 0.0 { 1.0 } else { 0.0 }).zip_map(&rho, |m, r| m * r);
    let right = rho.zip_map(&left, |a, b| a - b);
    let obs = Observers::Times(vec![0.1, 0.2]);
    let c = StepControls::default();
    let one = run(&InitialData::single(rho, 1.0), &law, 0.3, &c, &obs).unwrap();
    let two = run(&InitialData { density_per_species: vec![left, right], bound_b: 1.0 }, &law, 0.3, &c, &obs).unwrap();
    assert_eq!(one.frames.len(), two.frames.len());
    for (a, b) in one.frames.iter().zip(&two.frames) {
        assert_eq!(a.time, b.time);
        let diff = a.total().zip_map(&b.total(), |x, y| x - y).max_abs();
        assert!(diff <= 1e-12, "{diff}");
    }
}

#[test]
fn observer_times_are_hit_exactly() {
    let grid = Grid::line(64, 4.0).unwrap();
    let law = power_law(2.0, 0.1, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.5), 1.0);
    let times = vec![0.05, 0.125, 0.2];
    let traj = run(&data, &law, 0.25, &StepControls::default(), &Observers::Times(times.clone())).unwrap();
    let got: Vec<f64> = traj.frames.iter().map(|f| f.time).collect();
    assert_eq!(got, vec![0.0, 0.05, 0.125, 0.2, 0.25]);
    assert_eq!(traj.nearest(0.13).time, 0.125);
}

#[test]
fn pressure_stays_below_homeostatic_level() {
    let grid = Grid::line(128, 4.0).unwrap();
    let law = power_law(4.0, 0.01, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.9), 0.9f64.powi(4));
    let traj = run(&data, &law, 1.0, &StepControls::default(), &Observers::Stride(20)).unwrap();
    for f in &traj.frames {
        assert!(f.pressure.max() <= 1.0 + 1e-9);
        assert!(f.total().is_nonnegative());
    }
}

#[test]
fn two_dimensional_run_is_symmetric() {
    let grid = Grid::new(2, 32, 4.0, Boundary::Neumann).unwrap();
    let law = power_law(2.0, 0.05, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.7), 1.0);
    let traj = run(&data, &law, 0.1, &StepControls::default(), &Observers::Stride(1000)).unwrap();
    let rho = traj.last().total();
    let n = 32;
    for j in 0..n {
        for i in 0..n {
            let a = rho.values()[j * n + i];
            let b = rho.values()[i * n + j];
            let c = rho.values()[j * n + (n - 1 - i)];
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
    }
}

#[test]
fn small_domain_is_reported() {
    let grid = Grid::line(32, 1.2).unwrap();
    let law = power_law(2.0, 0.1, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.5), 1.0);
    let err = run(&data, &law, 2.0, &StepControls::default(), &Observers::EveryStep).unwrap_err();
    assert!(matches!(err, StepError::DomainTooSmall { .. }), "{err:?}");
}

#[test]
fn incompressible_law_is_rejected() {
    let grid = Grid::line(16, 4.0).unwrap();
    let law = crate::pressure_laws::incompressible_law(growth()).unwrap();
    let err = SolverState::new(vec![ScalarField::zeros(grid)], &law).unwrap_err();
    assert_eq!(err, StepError::Law(LawError::Multivalued));
}

#[test]
fn log_law_density_stays_below_one() {
    let grid = Grid::line(128, 4.0).unwrap();
    let law = log_law(0.05, growth()).unwrap();
    let data = InitialData::single(bump(grid, 0.6), 1.0);
    let traj = run(&data, &law, 1.0, &StepControls::default(), &Observers::Stride(50)).unwrap();
    let cap = law.density_cap(1.0);
    for f in &traj.frames {
        assert!(f.total().max() <= cap + 1e-9);
    }
}

#[test]
fn bad_controls_are_rejected() {
    let c = StepControls { cfl_fraction: 0.8, reaction_fraction: 0.5, ..StepControls::default() };
    assert!(c.validate().is_err());
}
