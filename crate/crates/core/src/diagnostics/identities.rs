//! Energy balances for coupled pairs `(e, z)`, where `a c - e(a) = z'(b)`
//! whenever `c` is a slope of `e` at `a` and `b` a slope of `f` there.

use super::weights::TestFunction;
use super::{check_nonempty, ranges, DiagnosticError, DissipationReport, FrameFields, Term, TimeWeight};
use crate::brinkman_stepper::Trajectory;
use crate::checks::CheckReport;
use crate::convex_energy::{
    e_from_z, h_energy, z_from_e, ClosedForm, ConvexScalarFunction, MonotoneMap, NegativeSide, Tabulation,
};
use crate::field_grid::gradient;
use crate::pressure_laws::{LawKind, Normalization, PressureLaw};

/// A density energy `e` with its coupled pressure function `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub name: String,
    pub e: ConvexScalarFunction,
    pub z: ConvexScalarFunction,
}

/// Exponent of the power-type balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerOrder {
    /// `e(a) = (a^m - a) / (m - 1)` with `m > 1`.
    Power(f64),
    /// `e(a) = a ln a - a`.
    Entropy,
}

/// Tabulation windows for densities up to `rho_max` and pressures up to
/// `b_max` under `law`.
fn windows(law: &PressureLaw, rho_max: f64, b_max: f64) -> (Tabulation, Tabulation) {
    let (_, dhi) = law.energy().domain();
    let r = rho_max.max(law.a0()).max(1e-3);
    let a_hi = if dhi.is_finite() { (1.25 * r).min(0.5 * (r + dhi)) } else { 1.25 * r };
    // pressures past f'(a_hi) would need densities outside the density window
    let b_hi = 1.25 * b_max.max(law.p_h());
    let b_hi = law.pressure(a_hi).map_or(b_hi, |top| b_hi.min(top));
    (Tabulation::on(0.0, a_hi), Tabulation::on(0.0, b_hi))
}

/// Exponent `g` when the pressure is exactly `rho^g`.
fn pressure_power(law: &PressureLaw) -> Option<f64> {
    match law.kind() {
        LawKind::Power { gamma, normalization: Normalization::PressureIsPower } => Some(gamma),
        _ => None,
    }
}

/// `z` with `z'(b) = scale * b^(exponent - 1)` on `b >= 0`.
fn power_z(exponent: f64, scale: f64) -> ConvexScalarFunction {
    ClosedForm::Power { exponent, scale, negative: NegativeSide::Zero }.into()
}

impl Coupling {
    pub fn new(name: &str, e: ConvexScalarFunction, z: ConvexScalarFunction) -> Self {
        Self { name: name.to_string(), e, z }
    }

    /// `e = f`, `z' = f*`.
    pub fn internal(law: &PressureLaw, rho_max: f64, b_max: f64) -> Result<Self, DiagnosticError> {
        let f = law.energy();
        if let Some(g) = pressure_power(law) {
            // z' = f* = g/(g+1) b^((g+1)/g)
            let z = power_z((g + 1.0) / g + 1.0, g / (g + 1.0));
            return Ok(Self::new("internal_energy", f.clone(), z));
        }
        let (_, bw) = windows(law, rho_max, b_max);
        let z = z_from_e(f, &MonotoneMap::identity(), f, &bw)?;
        Ok(Self::new("internal_energy", f.clone(), z))
    }

    /// `e = h`, `z' = h* o f*`.
    pub fn h1(law: &PressureLaw, rho_max: f64, b_max: f64) -> Result<Self, DiagnosticError> {
        if let Some(g) = pressure_power(law) {
            // h = g a^(g+2) / ((g+1)(g+2)), z' = g/(g+2) b^((g+2)/g)
            let h = ClosedForm::Power { exponent: g + 2.0, scale: g / (g + 1.0), negative: NegativeSide::Infinite };
            return Ok(Self::new("h1_energy", h.into(), power_z((g + 2.0) / g + 1.0, g / (g + 2.0))));
        }
        Self::h1_tabulated(law, rho_max, b_max)
    }

    /// [`Self::h1`] through the tabulated constructions for any law.
    pub fn h1_tabulated(law: &PressureLaw, rho_max: f64, b_max: f64) -> Result<Self, DiagnosticError> {
        let (aw, bw) = windows(law, rho_max, b_max);
        let f = law.energy();
        let h = h_energy(f, &aw)?;
        let z = z_from_e(&h, &MonotoneMap::of_convex(law.conjugate().clone()), f, &bw)?;
        Ok(Self::new("h1_energy", h, z))
    }

    /// `z' = (f*')^m` for powers, `z = f*` for the entropy.
    pub fn power(law: &PressureLaw, order: PowerOrder, rho_max: f64, b_max: f64) -> Result<Self, DiagnosticError> {
        let mut pair = Self::power_tabulated(law, order, rho_max, b_max)?;
        if let (Some(g), PowerOrder::Power(m)) = (pressure_power(law), order) {
            pair.z = power_z(m / g + 1.0, 1.0);
        }
        Ok(pair)
    }

    /// [`Self::power`] with `z` always built by quadrature.
    pub fn power_tabulated(
        law: &PressureLaw,
        order: PowerOrder,
        rho_max: f64,
        b_max: f64,
    ) -> Result<Self, DiagnosticError> {
        let (aw, bw) = windows(law, rho_max, b_max);
        match order {
            PowerOrder::Power(m) => {
                if !(m > 1.0 && m.is_finite()) {
                    return Err(DiagnosticError::Invalid(format!("power order must exceed 1, got {m}")));
                }
                let energy = move |a: f64| if a >= 0.0 { (a.powf(m) - a) / (m - 1.0) } else { f64::NAN };
                let e = ConvexScalarFunction::tabulate(&energy, &aw, true)?;
                let (fs, fs2) = (law.conjugate().clone(), law.conjugate().clone());
                let slope_map = MonotoneMap::new(
                    move |b| (m * fs.derivative(b).unwrap_or(0.0).powf(m - 1.0) - 1.0) / (m - 1.0),
                    move |b| {
                        let a = fs2.derivative(b).unwrap_or(0.0);
                        m * a.powf(m - 2.0) * fs2.second_derivative(b)
                    },
                );
                let z = z_from_e(&e, &slope_map, law.energy(), &bw)?;
                Ok(Self::new(&format!("power_{m}"), e, z))
            }
            PowerOrder::Entropy => {
                let energy = |a: f64| if a > 0.0 { a * a.ln() - a } else if a == 0.0 { 0.0 } else { f64::NAN };
                let e = ConvexScalarFunction::tabulate(&energy, &aw, true)?;
                Ok(Self::new("entropy", e, law.conjugate().clone()))
            }
        }
    }

    /// `z(b) = b^2 / 2` with `e(a) = a int_{a0/2}^a f'(s) / s^2 ds`.
    pub fn budget(law: &PressureLaw, rho_max: f64, b_max: f64) -> Result<Self, DiagnosticError> {
        let (aw, _) = windows(law, rho_max, b_max);
        let z: ConvexScalarFunction = ClosedForm::Quadratic { scale: 1.0 }.into();
        let e = e_from_z(&z, law.energy(), 0.5 * law.a0(), &aw)?;
        Ok(Self::new("derivative_budget", e, z))
    }

    /// Sampled check of `a c - e(a) = z'(f'(a))` on `(0, a_max]`.
    pub fn check(&self, law: &PressureLaw, a_max: f64) -> Result<(), DiagnosticError> {
        for k in 1..=64 {
            let a = a_max * k as f64 / 64.0;
            let Ok(b) = law.pressure(a) else { continue };
            let (Ok(c), Ok(expected)) = (self.e.derivative(a), self.z.derivative(b)) else {
                return Err(DiagnosticError::Invalid(format!("{}: no slope at a={a}", self.name)));
            };
            let found = a * c - self.e.value(a);
            if (found - expected).abs() > 1e-5 * (1.0 + expected.abs() + (a * c).abs()) {
                return Err(DiagnosticError::Coupling { a, expected, found });
            }
        }
        Ok(())
    }
}

/// Evaluate every term of the energy balance of `coupling` tested against
/// `psi`. The left side holds the final energy, the two dissipation terms,
/// the transport term and the curvature term; the right side holds the
/// initial energy and the growth term.
pub fn eee_residual(
    traj: &Trajectory,
    law: &PressureLaw,
    coupling: &Coupling,
    psi: &TestFunction,
) -> Result<DissipationReport, DiagnosticError> {
    check_nonempty(traj)?;
    let (rho_max, _) = ranges(traj);
    if rho_max > 0.0 {
        coupling.check(law, rho_max)?;
    }
    let grid = *traj.first().pressure.grid();
    let vol = grid.cell_volume();
    let nu = traj.nu;
    let space = psi.sample(grid);
    let growth = law.growth();
    let (e, z) = (&coupling.e, &coupling.z);
    let zp = |b: f64| z.derivative(b).unwrap_or(f64::NAN);

    let (mut friction, mut kinetic, mut transport, mut curvature, mut source) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut friction_min, mut friction_max) = (0.0f64, 0.0f64);
    let (mut kinetic_min, mut kinetic_max) = (0.0f64, 0.0f64);
    for frame in &traj.frames {
        let wt = frame.dt;
        if wt == 0.0 {
            continue;
        }
        let ff = FrameFields::new(frame, nu);
        let eta = psi.time.value(frame.time);
        let deta = psi.time.derivative(frame.time);
        let dot = ff.grad_w.cell_dot(&space.grad);
        let (mut fr, mut ki, mut tr, mut cu, mut gr) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..grid.len() {
            let (r, p, w) = (ff.rho.values()[k], ff.p()[k], ff.w()[k]);
            let phi = space.phi.values()[k];
            let er = e.value(r);
            let zpp = zp(p);
            let friction_cell = if nu > 0.0 { (zpp - zp(w)) * (p - w) / nu } else { 0.0 };
            let kinetic_cell = z.second_derivative(w) * ff.grad_sq.values()[k];
            friction_min = friction_min.min(friction_cell);
            friction_max = friction_max.max(friction_cell.abs());
            kinetic_min = kinetic_min.min(kinetic_cell);
            kinetic_max = kinetic_max.max(kinetic_cell.abs());
            fr += eta * phi * friction_cell;
            ki += eta * phi * kinetic_cell;
            tr += er * (eta * dot.values()[k] - deta * phi);
            cu -= z.value(w) * eta * space.lap.values()[k];
            gr += eta * phi * (er + zpp) * growth.rate(p);
        }
        friction += wt * vol * fr;
        kinetic += wt * vol * ki;
        transport += wt * vol * tr;
        curvature += wt * vol * cu;
        source += wt * vol * gr;
    }
    let energy_at = |frame: &crate::brinkman_stepper::Frame| {
        let eta = psi.time.value(frame.time);
        let rho = frame.total();
        eta * vol * rho.values().iter().zip(space.phi.values()).map(|(&r, &phi)| phi * e.value(r)).sum::<f64>()
    };
    let final_energy = energy_at(traj.last());
    let initial_energy = energy_at(traj.first());

    let lhs = final_energy + friction + kinetic + transport + curvature;
    let rhs = initial_energy + source;
    let terms = [
        ("final_energy", final_energy),
        ("friction", friction),
        ("kinetic", kinetic),
        ("transport", transport),
        ("curvature", curvature),
        ("initial_energy", initial_energy),
        ("growth", source),
    ]
    .into_iter()
    .map(|(n, v)| Term { name: n.to_string(), value: v })
    .collect();
    let mut checks = CheckReport::new();
    checks.at_least("friction_min_scaled", friction_min / friction_max.max(1.0), -1e-12);
    checks.at_least("kinetic_min_scaled", kinetic_min / kinetic_max.max(1.0), -1e-12);
    let all_finite = [lhs, rhs].iter().all(|v| v.is_finite());
    checks.flag("finite", all_finite);
    Ok(DissipationReport {
        identity: coupling.name.clone(),
        terms,
        lhs,
        rhs,
        residual: lhs - rhs,
        checks,
        cells: grid.len(),
        frames: traj.frames.len(),
        final_time: traj.last().time,
    })
}

/// Balance of the internal energy `f` with `psi = eta(t)`.
pub fn internal_energy_report(
    traj: &Trajectory,
    law: &PressureLaw,
    eta: TimeWeight,
) -> Result<DissipationReport, DiagnosticError> {
    check_nonempty(traj)?;
    let (r, b) = ranges(traj);
    eee_residual(traj, law, &Coupling::internal(law, r, b)?, &TestFunction::in_time(eta))
}

/// Balance of the `h` energy. The kinetic work `|grad f*(w)|^2`, computed
/// from face differences of `f*(w)`, is appended as `kinetic_flux`.
pub fn h1_energy_report(
    traj: &Trajectory,
    law: &PressureLaw,
    eta: TimeWeight,
) -> Result<DissipationReport, DiagnosticError> {
    check_nonempty(traj)?;
    let (r, b) = ranges(traj);
    let mut report = eee_residual(traj, law, &Coupling::h1(law, r, b)?, &TestFunction::in_time(eta))?;
    let fstar = law.conjugate();
    let flux: f64 = traj
        .frames
        .iter()
        .filter(|f| f.dt > 0.0)
        .map(|f| {
            let g = gradient(&f.potential.map(|w| fstar.value(w)));
            f.dt * eta.value(f.time) * g.inner(&g)
        })
        .sum();
    report.terms.push(Term { name: "kinetic_flux".into(), value: flux });
    Ok(report)
}

/// Balance for `(a^m - a)/(m - 1)` or for the entropy, with `psi = 1`.
pub fn power_entropy_report(
    traj: &Trajectory,
    law: &PressureLaw,
    order: PowerOrder,
) -> Result<DissipationReport, DiagnosticError> {
    check_nonempty(traj)?;
    let (r, b) = ranges(traj);
    let mut report = eee_residual(traj, law, &Coupling::power(law, order, r, b)?, &TestFunction::constant())?;
    if order == PowerOrder::Entropy {
        let rho = traj.first().total();
        let second_moment: f64 = rho
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let (x, y) = rho.grid().position(k);
                v * (x * x + y * y)
            })
            .sum::<f64>()
            * rho.grid().cell_volume();
        report.checks.flag("finite_second_moment", second_moment.is_finite());
    }
    Ok(report)
}

/// Local bound on `psi (|grad w|^2 + nu |Lap_h w|^2)` against
/// `C N(psi) (|rho + p + rho^2 p^2|_inf + 1)`.
pub fn derivative_budget(
    traj: &Trajectory,
    psi: &TestFunction,
    constant: f64,
) -> Result<DissipationReport, DiagnosticError> {
    check_nonempty(traj)?;
    let grid = *traj.first().pressure.grid();
    let vol = grid.cell_volume();
    let space = psi.sample(grid);
    let nu = traj.nu;
    let mut gradient_part = 0.0;
    let mut laplacian_part = 0.0;
    let mut sup: f64 = 0.0;
    for frame in &traj.frames {
        let rho = frame.total();
        for (&r, &p) in rho.values().iter().zip(frame.pressure.values()) {
            sup = sup.max(r + p + r * r * p * p);
        }
        if frame.dt == 0.0 {
            continue;
        }
        let ff = FrameFields::new(frame, nu);
        let eta = psi.time.value(frame.time);
        let (mut g, mut l) = (0.0, 0.0);
        for k in 0..grid.len() {
            let weight = eta * space.phi.values()[k];
            g += weight * ff.grad_sq.values()[k];
            l += weight * nu * ff.lap_w.values()[k].powi(2);
        }
        gradient_part += frame.dt * vol * g;
        laplacian_part += frame.dt * vol * l;
    }
    let n_psi = psi.norm(traj);
    let lhs = gradient_part + laplacian_part;
    let scale = n_psi * (sup + 1.0);
    let bound = constant * scale;
    let mut checks = CheckReport::new();
    checks.at_most("budget", lhs, bound);
    checks.info("ratio", if scale > 0.0 { lhs / scale } else { 0.0 });
    let terms = [
        ("gradient", gradient_part),
        ("laplacian", laplacian_part),
        ("n_psi", n_psi),
        ("sup_norm", sup),
        ("bound", bound),
    ]
    .into_iter()
    .map(|(n, v)| Term { name: n.to_string(), value: v })
    .collect();
    Ok(DissipationReport {
        identity: "derivative_budget".into(),
        terms,
        lhs,
        rhs: bound,
        residual: lhs - bound,
        checks,
        cells: grid.len(),
        frames: traj.frames.len(),
        final_time: traj.last().time,
    })
}
