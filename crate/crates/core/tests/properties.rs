use congestion::brinkman_stepper::{run, Observers, StepControls};
use congestion::convex_energy::{h_energy, ClosedForm, ConvexScalarFunction, Tabulation};
use congestion::darcy_stepper::{run_darcy_with, DarcyScheme};
use congestion::diagnostics::{h1_energy_report, internal_energy_report, Coupling, TimeWeight};
use congestion::field_grid::{decode_field, encode_field, gradient, laplacian, Boundary, Grid, ScalarField};
use congestion::helmholtz_solver::solve_w;
use congestion::pressure_laws::{joint_power_law, log_law, power_law, Growth, InitialData, PressureLaw};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn growth() -> Growth {
    Growth::linear(1.0, 1.0).unwrap()
}

fn any_law() -> impl Strategy<Value = PressureLaw> {
    prop_oneof![
        (1.0f64..12.0, 0.0f64..0.1).prop_map(|(g, nu)| power_law(g, nu, growth()).unwrap()),
        (0.05f64..2.0).prop_map(|nu| log_law(nu, growth()).unwrap()),
    ]
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=2, 8usize..24, prop_oneof![Just(Boundary::Neumann), Just(Boundary::Periodic)])
        .prop_map(|(dim, cells, b)| Grid::new(dim, cells, 2.0, b).unwrap())
}

fn field_on(grid: Grid, lo: f64, hi: f64) -> impl Strategy<Value = ScalarField> {
    proptest::collection::vec(lo..hi, grid.len()).prop_map(move |v| ScalarField::from_vec(grid, v).unwrap())
}

fn grid_and_two_fields() -> impl Strategy<Value = (ScalarField, ScalarField)> {
    grid_strategy().prop_flat_map(|g| (field_on(g, -1.0, 1.0), field_on(g, -1.0, 1.0)))
}

/// Compact bump well inside `[-2, 2]`.
fn bump_data(cells: usize, height: f64, center: f64, width: f64) -> InitialData {
    let grid = Grid::line(cells, 4.0).unwrap();
    let rho = ScalarField::from_fn(grid, |x, _| height * (1.0 - ((x - center) / width).powi(2)).max(0.0).powi(2));
    InitialData::single(rho, 1.0)
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn young_equality_on_the_graph(law in any_law(), t in 0.01f64..0.95) {
        let a = if matches!(law.energy(), ConvexScalarFunction::Closed(ClosedForm::LogBarrier { .. })) { t } else { 2.0 * t };
        let b = law.pressure(a).unwrap();
        let (f, fs) = (law.energy(), law.conjugate());
        let gap = a * b - f.value(a) - fs.value(b);
        prop_assert!(gap.abs() <= 1e-10 * (1.0 + (a * b).abs()), "{gap}");
        // off the graph the inequality is strict
        let off = a * (b + 0.1) - f.value(a) - fs.value(b + 0.1);
        prop_assert!(off < 0.0);
    }

    #[test]
    fn biconjugate_returns_the_energy(law in any_law(), t in 0.0f64..0.95) {
        let f = law.energy();
        let back = law.conjugate().conjugate().unwrap();
        prop_assert!((back.value(t) - f.value(t)).abs() <= 1e-12 * (1.0 + f.value(t).abs()));
    }

    #[test]
    fn tabulated_conjugate_matches_the_closed_form(gamma in 1.0f64..6.0, frac in 0.0f64..1.0) {
        let law = power_law(gamma, 0.0, growth()).unwrap();
        let b_p = 1.0;
        let table: ConvexScalarFunction = law.energy().to_table(&Tabulation::on(0.0, 1.5)).unwrap().into();
        let tab = table.conjugate_with(&Tabulation::on(0.0, b_p)).unwrap();
        let b = frac * b_p;
        let exact = law.conjugate().value(b);
        prop_assert!((tab.value(b) - exact).abs() <= 1e-8 * exact.abs().max(1e-8), "{b} {} {exact}", tab.value(b));
    }

    #[test]
    fn subdifferential_endpoints_are_monotone(gamma in 1.0f64..8.0, xs in proptest::collection::vec(0.0f64..1.2, 2..40)) {
        let f = power_law(gamma, 0.0, growth()).unwrap();
        let h = h_energy(f.energy(), &Tabulation::on(0.0, 1.25)).unwrap();
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        for w in xs.windows(2) {
            let (s, t) = (h.subdifferential(w[0]).unwrap(), h.subdifferential(w[1]).unwrap());
            prop_assert!(s.lo <= t.lo + 1e-12 && s.hi <= t.hi + 1e-12);
        }
    }

    #[test]
    fn summation_by_parts((u, v) in grid_and_two_fields()) {
        let lhs = laplacian(&u).inner(&v);
        let rhs = -gradient(&u).inner(&gradient(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }

    #[test]
    fn binary_field_round_trip(field in grid_strategy().prop_flat_map(|g| field_on(g, -1e3, 1e3))) {
        prop_assert_eq!(decode_field(&encode_field(&field)).unwrap(), field);
    }

    #[test]
    fn potential_obeys_the_maximum_principle(
        p in grid_strategy().prop_flat_map(|g| field_on(g, 0.0, 5.0)),
        nu in 0.0f64..1.0,
    ) {
        let w = solve_w(&p, nu).unwrap();
        let top = p.max();
        prop_assert!(w.min() >= -1e-12 * top && w.max() <= top * (1.0 + 1e-12));
    }

    #[test]
    fn potential_solve_is_self_adjoint((p, q) in grid_and_two_fields(), nu in 0.0f64..1.0) {
        let a = solve_w(&p, nu).unwrap().inner(&q);
        let b = p.inner(&solve_w(&q, nu).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{a} {b}");
    }

    #[test]
    fn small_viscosity_potential_is_close_to_pressure(k in 1usize..4, nu in 1e-6f64..1e-2) {
        let grid = Grid::line(128, 2.0).unwrap();
        let p = ScalarField::from_fn(grid, |x, _| (k as f64 * std::f64::consts::PI * x).cos() + 1.5);
        let w = solve_w(&p, nu).unwrap();
        let gap = w.zip_map(&p, |a, b| a - b).l2_norm();
        prop_assert!(gap <= nu * laplacian(&p).l2_norm() * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn brinkman_runs_stay_nonnegative_and_balance_mass(
        gamma in 1.0f64..5.0,
        nu in 0.0f64..0.05,
        height in 0.1f64..0.9,
        center in -0.3f64..0.3,
        width in 0.2f64..0.5,
    ) {
        let law = power_law(gamma, nu, growth()).unwrap();
        let data = bump_data(96, height, center, width);
        let traj = run(&data, &law, 0.05, &StepControls::default(), &Observers::EveryStep).unwrap();
        prop_assert!(traj.frames.iter().all(|f| f.species.iter().all(|s| s.min() >= 0.0)));
        prop_assert!(traj.mass_defect <= 1e-12, "{}", traj.mass_defect);
        // explicit mass ledger between consecutive frames
        for w in traj.frames.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let source = a.total().inner(&a.pressure.map(|p| law.growth().rate(p)));
            let change = b.total().integral() - a.total().integral();
            prop_assert!((change - a.dt * source).abs() <= 1e-12 * a.total().integral().max(1.0));
        }
    }

    #[test]
    fn darcy_runs_stay_nonnegative(gamma in 1.0f64..4.0, height in 0.1f64..0.9, upwind in any::<bool>()) {
        let law = power_law(gamma, 0.0, growth()).unwrap();
        let scheme = if upwind { DarcyScheme::Upwind } else { DarcyScheme::default() };
        let data = bump_data(96, height, 0.0, 0.4);
        let traj = run_darcy_with(&data, &law, 0.05, &StepControls::default(), &Observers::EveryStep, scheme).unwrap();
        prop_assert!(traj.frames.iter().all(|f| f.total().min() >= 0.0));
        prop_assert!(traj.mass_defect <= 1e-10, "{}", traj.mass_defect);
    }

    #[test]
    fn dissipation_terms_are_nonnegative(law in any_law(), height in 0.2f64..0.8) {
        let nu = law.nu().max(1e-3);
        let law = law.with_nu(nu).unwrap();
        let mut data = bump_data(96, height, 0.0, 0.4);
        data.bound_b = law.pressure(height).unwrap().max(1.0);
        let traj = run(&data, &law, 0.05, &StepControls::default(), &Observers::EveryStep).unwrap();
        for report in [
            internal_energy_report(&traj, &law, TimeWeight::Constant).unwrap(),
            h1_energy_report(&traj, &law, TimeWeight::Constant).unwrap(),
        ] {
            for name in ["friction_min_scaled", "kinetic_min_scaled"] {
                let c = report.checks.get(name).unwrap();
                prop_assert!(c.pass, "{name} {}", c.value);
            }
        }
    }

    #[test]
    fn frictional_dissipation_identity(gamma in 1.0f64..4.0, nu in 1e-3f64..0.1) {
        // (z'(w) - z'(p)) (w - p) / nu = nu |Lap w|^2 * mean of z'' on [p, w]
        let law = power_law(gamma, nu, growth()).unwrap();
        let data = bump_data(96, 0.7, 0.0, 0.4);
        let traj = run(&data, &law, 0.02, &StepControls::default(), &Observers::Times(vec![0.02])).unwrap();
        let frame = traj.last();
        let pair = Coupling::internal(&law, 1.0, 1.0).unwrap();
        let z = &pair.z;
        let lap = laplacian(&frame.potential);
        for k in 0..frame.pressure.values().len() {
            let (p, w) = (frame.pressure.values()[k], frame.potential.values()[k]);
            let lhs = (z.derivative(w).unwrap() - z.derivative(p).unwrap()) * (w - p) / nu;
            let n = 2000;
            let mean: f64 = (0..n).map(|i| z.second_derivative(p + (w - p) * (i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            let rhs = nu * lap.values()[k].powi(2) * mean;
            prop_assert!((lhs - rhs).abs() <= 1e-4 * lhs.abs().max(1e-12), "{k} {lhs} {rhs}");
        }
    }

    #[test]
    fn two_species_with_equal_growth_add_up(split in 0.1f64..0.9, gamma in 1.0f64..4.0, nu in 0.0f64..0.05) {
        let law = power_law(gamma, nu, growth()).unwrap();
        let total = bump_data(96, 0.7, 0.0, 0.4).total();
        let parts = InitialData {
            density_per_species: vec![total.map(|r| split * r), total.map(|r| (1.0 - split) * r)],
            bound_b: 1.0,
        };
        let single = InitialData::single(total, 1.0);
        let a = run(&parts, &law, 0.05, &StepControls::default(), &Observers::EveryStep).unwrap();
        let b = run(&single, &law, 0.05, &StepControls::default(), &Observers::EveryStep).unwrap();
        prop_assert_eq!(a.frames.len(), b.frames.len());
        for (x, y) in a.frames.iter().zip(&b.frames) {
            prop_assert!(x.total().zip_map(&y.total(), |s, t| s - t).max_abs() <= 1e-12);
        }
    }
}

#[test]
fn joint_family_approaches_the_hard_constraint() {
    // f at fixed densities: to 0 below 1, to infinity above
    let below: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&nu| joint_power_law(nu, growth()).unwrap().energy().value(0.9)).collect();
    let above: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&nu| joint_power_law(nu, growth()).unwrap().energy().value(1.1)).collect();
    assert!(below.windows(2).all(|w| w[1] < w[0]) && below[2] < 1e-40, "{below:?}");
    assert!(above.windows(2).all(|w| w[1] > w[0]) && above[2] > 1e35, "{above:?}");
}
