use congestion::brinkman_stepper::{Frame, Trajectory};
use congestion::field_grid::{Boundary, Grid, ScalarField};
use congestion_experiments::rates::fit_loglog;
use congestion_experiments::store::{decode_trajectory, encode_trajectory};
use congestion_experiments::{parse_config, NoFit};
use proptest::prelude::*;
use proptest::test_runner::Config;

const EXAMPLE: &str = include_str!("../../../configs/example.toml");

fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

fn field(grid: Grid, values: &[f64]) -> ScalarField {
    let data = (0..grid.len()).map(|k| values[k % values.len()]).collect();
    ScalarField::from_vec(grid, data).unwrap()
}

prop_compose! {
    fn any_trajectory()(
        dim in 1usize..=2,
        cells in 8usize..20,
        periodic in any::<bool>(),
        species in 1usize..4,
        times in proptest::collection::vec(0.0f64..1.0, 1..5),
        values in proptest::collection::vec(0.0f64..2.0, 1..16),
        nu in 0.0f64..1.0,
        steps in 0usize..1000,
    ) -> Trajectory {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Neumann };
        let grid = Grid::new(dim, cells, 4.0, boundary).unwrap();
        let mut times = times;
        times.sort_by(f64::total_cmp);
        let frames = times
            .iter()
            .enumerate()
            .map(|(k, &time)| Frame {
                time,
                dt: if k == 0 { 0.0 } else { time - times[k - 1] },
                species: (0..species).map(|s| field(grid, &values[s.min(values.len() - 1)..])).collect(),
                pressure: field(grid, &values),
                potential: field(grid, &values[values.len() / 2..]),
            })
            .collect();
        Trajectory { frames, nu, steps, mass_defect: 1e-15 }
    }
}

#[test]
fn shipped_example_parses() {
    let cfg = parse_config(EXAMPLE).unwrap();
    assert_eq!(cfg.scenario, "bump-1d");
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn config_parser_never_panics_on_text(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn config_parser_never_panics_on_edited_example(at in 0usize..EXAMPLE.len(), cut in 0usize..40, junk in "[=\\[\\]\"a-z0-9.,\\n -]{0,12}") {
        let mut text = EXAMPLE.to_string();
        let start = (0..=at).rev().find(|&i| text.is_char_boundary(i)).unwrap();
        let end = (start + cut..=text.len()).find(|&i| text.is_char_boundary(i)).unwrap_or(text.len());
        text.replace_range(start..end, &junk);
        let _ = parse_config(&text);
    }

    #[test]
    fn trajectory_decoder_never_panics_on_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let mut with_magic = b"CGTRAJ01".to_vec();
        with_magic.extend_from_slice(&bytes);
        let _ = decode_trajectory(&bytes);
        let _ = decode_trajectory(&with_magic);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn trajectory_round_trips(traj in any_trajectory()) {
        let bytes = encode_trajectory(&traj);
        prop_assert_eq!(decode_trajectory(&bytes).unwrap(), traj);
    }

    #[test]
    fn damaged_trajectory_is_rejected_or_decodes(traj in any_trajectory(), at in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let mut bytes = encode_trajectory(&traj);
        let k = at.index(bytes.len());
        bytes[k] ^= flip;
        if let Ok(back) = decode_trajectory(&bytes) {
            prop_assert!(back.frames.iter().all(|f| f.species.iter().all(ScalarField::is_nonnegative)));
        }
        let cut = at.index(bytes.len());
        prop_assert!(decode_trajectory(&encode_trajectory(&traj)[..cut]).is_err());
    }

    #[test]
    fn loglog_fit_recovers_power_laws(slope in -3.0f64..3.0, scale in 0.01f64..100.0, n in 3usize..8) {
        let points: Vec<(f64, f64)> = (0..n).map(|k| {
            let x = 0.5f64.powi(k as i32);
            (x, scale * x.powf(slope))
        }).collect();
        let fit = fit_loglog(&points).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!(fit.lo <= fit.slope && fit.slope <= fit.hi);
        prop_assert!(fit.hi - fit.lo < 1e-6);
    }
}

#[test]
fn loglog_fit_refuses_degenerate_columns() {
    assert_eq!(fit_loglog(&[(1.0, 1.0), (0.5, 2.0)]), Err(NoFit::TooFewPoints));
    assert_eq!(fit_loglog(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]), Err(NoFit::Degenerate));
    assert_eq!(fit_loglog(&[(1.0, 1.0), (0.5, 0.0), (0.25, 3.0)]), Err(NoFit::Degenerate));
}
