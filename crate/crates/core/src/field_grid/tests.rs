use super::*;
use std::f64::consts::PI;

fn grids() -> Vec<Grid> {
    let mut out = Vec::new();
    for dim in [1, 2] {
        for b in [Boundary::Neumann, Boundary::Periodic] {
            out.push(Grid::new(dim, 12, 3.0, b).unwrap());
        }
    }
    out
}

fn pseudo_random(grid: Grid, seed: u64) -> ScalarField {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let data = (0..grid.len())
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    ScalarField::from_vec(grid, data).unwrap()
}

#[test]
fn grid_rejects_bad_shapes() {
    assert_eq!(Grid::new(3, 16, 1.0, Boundary::Neumann), Err(GridError::Dimension(3)));
    assert_eq!(Grid::new(1, 7, 1.0, Boundary::Neumann), Err(GridError::TooFewCells(7)));
    assert!(Grid::new(1, 8, 0.0, Boundary::Neumann).is_err());
}

#[test]
fn constant_has_zero_gradient_and_laplacian() {
    for g in grids() {
        let u = ScalarField::constant(g, 2.5);
        assert_eq!(gradient(&u).max_abs(), 0.0);
        assert_eq!(laplacian(&u).max_abs(), 0.0);
    }
}

#[test]
fn periodic_sine_gradient() {
    let l = 2.0;
    let g = Grid::new(1, 32, l, Boundary::Periodic).unwrap();
    let h = g.spacing();
    let u = ScalarField::from_fn(g, |x, _| (2.0 * PI * x / l).sin());
    let du = gradient(&u);
    for i in 0..32 {
        let face = g.center(i) + 0.5 * h;
        let expected = (2.0 / h) * (PI * h / l).sin() * (2.0 * PI * face / l).cos();
        assert!((du.x_faces()[i] - expected).abs() < 1e-12, "{i}");
    }
}

#[test]
fn linear_ramp_interior_faces() {
    let g = Grid::line(16, 4.0).unwrap();
    let u = ScalarField::from_fn(g, |x, _| x);
    let du = gradient(&u);
    for i in 0..15 {
        assert!((du.x_faces()[i] - 1.0).abs() < 1e-12);
    }
    assert_eq!(du.x_faces()[15], 0.0);
}

#[test]
fn divergence_is_negative_adjoint() {
    for g in grids() {
        let u = pseudo_random(g, 1);
        let mut f = VectorField::zeros(g);
        let a = pseudo_random(g, 2);
        let b = pseudo_random(g, 3);
        f.x_faces_mut().copy_from_slice(a.values());
        if g.dim() == 2 {
            f.y_faces_mut().copy_from_slice(b.values());
        }
        let lhs = divergence(&f).inner(&u);
        let rhs = -f.inner(&gradient(&u));
        // boundary faces are ignored by divergence; gradient is zero there
        assert!((lhs - rhs).abs() < 1e-12, "{g:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn divergence_of_gradient_is_laplacian() {
    for g in grids() {
        let u = pseudo_random(g, 7);
        let a = divergence(&gradient(&u));
        let b = laplacian(&u);
        let scale = b.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn periodic_divergence_sums_to_zero() {
    for g in grids().into_iter().filter(|g| g.boundary() == Boundary::Periodic) {
        let mut f = VectorField::zeros(g);
        f.x_faces_mut().copy_from_slice(pseudo_random(g, 4).values());
        assert!(divergence(&f).integral().abs() < 1e-13);
    }
}

#[test]
fn laplacian_sine_eigenvalue() {
    let l = 1.0;
    let g = Grid::new(1, 40, l, Boundary::Periodic).unwrap();
    let h = g.spacing();
    for mode in [1.0, 3.0] {
        let k = 2.0 * PI * mode / l;
        let u = ScalarField::from_fn(g, |x, _| (k * x).sin());
        let lu = laplacian(&u);
        let lambda = -(2.0 - 2.0 * (k * h).cos()) / (h * h);
        for (a, b) in lu.values().iter().zip(u.values()) {
            assert!((a - lambda * b).abs() < 1e-9);
        }
    }
}

#[test]
fn laplacian_exact_on_quadratic_interior() {
    let g = Grid::line(20, 2.0).unwrap();
    let u = ScalarField::from_fn(g, |x, _| x * x);
    let lu = laplacian(&u);
    for i in 1..19 {
        assert!((lu.values()[i] - 2.0).abs() < 1e-9);
    }
}

#[test]
fn masked_integral_examples() {
    let g = Grid::line(100, 2.0).unwrap();
    let w = ScalarField::from_fn(g, |x, _| x + 1.0 - 0.5); // ramp covering [-0.5, 1.5]
    let one = ScalarField::constant(g, 1.0);
    assert!((masked_integral(&one, &w, |_| true) - one.integral()).abs() < 1e-15);
    assert_eq!(masked_integral(&one, &w, |_| false), 0.0);
    let v = masked_integral(&one, &w, |m| (0.2..=0.4).contains(&m));
    assert!((v - 0.2).abs() <= g.spacing());
}

#[test]
fn summation_by_parts() {
    for g in grids() {
        let u = pseudo_random(g, 11);
        let v = pseudo_random(g, 12);
        let lhs = laplacian(&u).inner(&v);
        let rhs = -gradient(&u).inner(&gradient(&v));
        assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
    }
}

#[test]
fn gradient_norm_converges_second_order() {
    // continuum: int_0^L |d/dx sin(2 pi x / L)|^2 = 2 pi^2 / L
    let l = 1.0;
    let exact = 2.0 * PI * PI / l;
    let err = |n| {
        let g = Grid::new(1, n, l, Boundary::Periodic).unwrap();
        let u = ScalarField::from_fn(g, |x, _| (2.0 * PI * x / l).sin());
        let du = gradient(&u);
        (du.inner(&du) - exact).abs()
    };
    let order = (err(32) / err(64)).log2();
    assert!(order > 1.9, "{order}");
}

#[test]
fn cell_square_norm_integrates_to_face_norm() {
    for g in grids() {
        let du = gradient(&pseudo_random(g, 5));
        assert!((du.cell_square_norm().integral() - du.inner(&du)).abs() < 1e-12);
    }
}

#[test]
fn binary_and_csv_round_trip() {
    for g in grids() {
        let u = pseudo_random(g, 9);
        let back = decode_field(&encode_field(&u)).unwrap();
        assert_eq!(back, u);
        let csv = parse_field_csv(&u.to_csv(), g.boundary()).unwrap();
        assert_eq!(csv.values(), u.values());
    }
    assert!(decode_field(b"CGF1").is_err());
    assert!(parse_field_csv("x,value\n0,1\n", Boundary::Neumann).is_err());
}

#[test]
fn boundary_monitor_sees_edge_mass() {
    let g = Grid::line(32, 1.0).unwrap();
    let mut u = ScalarField::zeros(g);
    u.values_mut()[16] = 1.0;
    assert_eq!(u.boundary_max(5), 0.0);
    u.values_mut()[2] = 1e-3;
    assert_eq!(u.boundary_max(5), 1e-3);
}

#[test]
fn restriction_keeps_the_integral() {
    let fine = Grid::new(2, 32, 2.0, Boundary::Neumann).unwrap();
    let coarse = Grid::new(2, 8, 2.0, Boundary::Neumann).unwrap();
    let u = ScalarField::from_fn(fine, |x, y| (x * 3.0).sin() + y * y);
    let r = restrict(&u, coarse).unwrap();
    assert!((r.integral() - u.integral()).abs() < 1e-12);
    assert!(restrict(&u, Grid::new(2, 12, 2.0, Boundary::Neumann).unwrap()).is_err());
}
