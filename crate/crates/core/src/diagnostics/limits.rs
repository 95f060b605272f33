//! Bounds, complementarity and the quantities tracking `nu -> 0`.

use super::weights::TestFunction;
use super::{check_nonempty, ranges, DiagnosticError, FrameFields};
use crate::brinkman_stepper::Trajectory;
use crate::checks::CheckReport;
use crate::field_grid::{gradient, restrict, GridError};
use crate::pressure_laws::{validate_well_prepared, InitialData, PressureLaw};

/// Relative slack allowed on each a-priori bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTolerances {
    pub pressure: f64,
    pub mass: f64,
    pub density: f64,
}

impl Default for BoundTolerances {
    fn default() -> Self {
        Self { pressure: 1e-2, mass: 1e-3, density: 1e-2 }
    }
}

/// Pressure below `B_p = max(p_H, B)`, mass below `exp(G(0) t) M(0)` and
/// density below `sup df*(B_p)` on every frame, plus the checks on the datum.
pub fn bound_monitor(
    traj: &Trajectory,
    law: &PressureLaw,
    data: &InitialData,
    tol: &BoundTolerances,
) -> Result<CheckReport, DiagnosticError> {
    check_nonempty(traj)?;
    let mut report = CheckReport::new();
    for mut e in validate_well_prepared(data, law).entries {
        e.name = format!("initial_{}", e.name);
        report.entries.push(e);
    }
    let b_p = law.pressure_bound(data.bound_b);
    let cap = law.density_cap(data.bound_b);
    let g0 = law.growth().rate(0.0);
    let m0 = data.mass();
    let (mut p_max, mut rho_max, mut mass_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for f in &traj.frames {
        p_max = p_max.max(f.pressure.max());
        let rho = f.total();
        rho_max = rho_max.max(rho.max());
        let bound = (g0 * f.time).exp() * m0;
        if bound > 0.0 {
            mass_ratio = mass_ratio.max(rho.integral() / bound);
        } else if rho.integral() > 0.0 {
            mass_ratio = f64::INFINITY;
        }
    }
    report.at_most("pressure_max", p_max, b_p * (1.0 + tol.pressure));
    report.at_most("mass_ratio", mass_ratio, 1.0 + tol.mass);
    report.at_most("density_max", rho_max, cap * (1.0 + tol.density));
    Ok(report)
}

/// Residual of `Lap_h w + G(p) = 0` where the pressure is high.
#[derive(Debug, Clone, PartialEq)]
pub struct Complementarity {
    /// Space-time integral of `|Lap_h w + G(p)|` over `{p > v_p + margin}`.
    pub l1: f64,
    pub linf: f64,
    /// Cell-frames that entered the residual.
    pub cells: usize,
    /// Largest `(-Lap_h w - 1{p > v_p} G(p))_+` over `{w > v_p}`.
    pub inequality_violation: f64,
    /// Set when the density exceeds `sup df*(v_p)`, so the identity is not
    /// guaranteed and the numbers are only indicative.
    pub advisory: bool,
}

pub fn complementarity_residual(
    traj: &Trajectory,
    law: &PressureLaw,
    v_p: f64,
    margin: f64,
) -> Result<Complementarity, DiagnosticError> {
    check_nonempty(traj)?;
    let grid = *traj.first().pressure.grid();
    let vol = grid.cell_volume();
    let growth = law.growth();
    let (rho_max, _) = ranges(traj);
    let mut out = Complementarity {
        l1: 0.0,
        linf: 0.0,
        cells: 0,
        inequality_violation: 0.0,
        advisory: rho_max > law.density_at_pressure(v_p),
    };
    for frame in &traj.frames {
        let ff = FrameFields::new(frame, traj.nu);
        for k in 0..grid.len() {
            let (p, w, lap) = (ff.p()[k], ff.w()[k], ff.lap_w.values()[k]);
            let g = growth.rate(p);
            if p > v_p + margin {
                let r = (lap + g).abs();
                out.linf = out.linf.max(r);
                out.l1 += frame.dt * vol * r;
                out.cells += 1;
            }
            if w > v_p {
                let allowed = if p > v_p { g } else { 0.0 };
                out.inequality_violation = out.inequality_violation.max(-lap - allowed);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularMass {
    /// Space-time integral of `|grad w|^2` where `w` lies in the set.
    pub integral: f64,
    /// Total length of the set.
    pub measure: f64,
    pub ratio: f64,
}

fn merge(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Space-time integral of `1_A(w) |grad w|^2` over frames at or after `t0`.
pub fn singular_mass(traj: &Trajectory, intervals: &[(f64, f64)], t0: f64) -> Result<SingularMass, DiagnosticError> {
    check_nonempty(traj)?;
    let set = merge(intervals);
    let measure: f64 = set.iter().map(|(a, b)| b - a).sum();
    let inside = |w: f64| set.iter().any(|&(a, b)| w >= a && w <= b);
    let mut integral = 0.0;
    for f in traj.frames.iter().filter(|f| f.time >= t0 && f.dt > 0.0) {
        let sq = gradient(&f.potential).cell_square_norm();
        integral += f.dt * sq.masked_integral(&f.potential, inside);
    }
    let ratio = if measure > 0.0 { integral / measure } else { 0.0 };
    Ok(SingularMass { integral, measure, ratio })
}

/// `psi |rho - f*'(w)| |grad w|` and the two pieces that bound it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSwap {
    pub total: f64,
    /// `psi |p - w| |grad w|`.
    pub i1: f64,
    /// `psi 1_S(w) |grad w|^2` with `S` the pressures where the maximal
    /// function of `f*''` exceeds `1 / delta`.
    pub i2: f64,
    pub delta: f64,
    /// `i1 / delta + sqrt(i2 |psi|_1 |rho|_inf)`.
    pub bound: f64,
}

/// Pressures on `[0, b_max]` (in `cells` bins) whose maximal slope of `df*`
/// exceeds `1 / delta`.
fn steep_set(law: &PressureLaw, b_max: f64, delta: f64, cells: usize) -> Vec<bool> {
    let step = b_max / cells as f64;
    let sub: Vec<(f64, f64)> = (0..=cells)
        .map(|i| {
            let b = i as f64 * step;
            law.conjugate().subdifferential(b).map(|s| (s.lo, s.hi)).unwrap_or((0.0, 0.0))
        })
        .collect();
    let mut out = vec![false; cells + 1];
    for i in 0..=cells {
        // the kink of a set-valued df* makes the quotient unbounded
        if sub[i].1 - sub[i].0 > 0.0 {
            out[i] = true;
            continue;
        }
        out[i] = (0..=cells).filter(|&j| j != i).any(|j| {
            let jump = (sub[i].1 - sub[j].0).abs().max((sub[j].1 - sub[i].0).abs());
            jump > (i as f64 - j as f64).abs() * step / delta
        });
    }
    out
}

/// `delta` defaults to `nu^(1/3)`.
pub fn flux_swap_error(
    traj: &Trajectory,
    law: &PressureLaw,
    psi: &TestFunction,
    delta: Option<f64>,
) -> Result<FluxSwap, DiagnosticError> {
    check_nonempty(traj)?;
    let nu = traj.nu;
    let delta = delta.unwrap_or(nu.cbrt());
    let grid = *traj.first().pressure.grid();
    let vol = grid.cell_volume();
    let space = psi.sample(grid);
    let (rho_max, b_max) = ranges(traj);
    let bins = 1024;
    let b_top = b_max.max(f64::MIN_POSITIVE);
    let steep = if delta > 0.0 { steep_set(law, b_top, delta, bins) } else { vec![true; bins + 1] };
    let in_steep = |w: f64| steep[((w / b_top * bins as f64).round().max(0.0) as usize).min(bins)];
    let (mut total, mut i1, mut i2, mut psi_l1) = (0.0, 0.0, 0.0, 0.0);
    for frame in traj.frames.iter().filter(|f| f.dt > 0.0) {
        let ff = FrameFields::new(frame, nu);
        let eta = psi.time.value(frame.time);
        let (mut t, mut a, mut b, mut m) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..grid.len() {
            let weight = eta * space.phi.values()[k];
            let sq = ff.grad_sq.values()[k];
            let norm = sq.sqrt();
            let (r, p, w) = (ff.rho.values()[k], ff.p()[k], ff.w()[k]);
            t += weight * (r - law.density(w)).abs() * norm;
            a += weight * (p - w).abs() * norm;
            if in_steep(w) {
                b += weight * sq;
            }
            m += weight;
        }
        total += frame.dt * vol * t;
        i1 += frame.dt * vol * a;
        i2 += frame.dt * vol * b;
        psi_l1 += frame.dt * vol * m;
    }
    let bound = if delta > 0.0 { i1 / delta } else { 0.0 } + (i2 * psi_l1 * rho_max).sqrt();
    Ok(FluxSwap { total, i1, i2, delta, bound })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGap {
    /// `|grad w - grad p_ref|` in space-time `L^2`.
    pub gradient: f64,
    /// `|grad f*(w) - grad Phi(rho_ref)|` in space-time `L^2`.
    pub flux: f64,
}

/// Block average of `u` onto a coarser grid with the same box.
fn invalid(e: GridError) -> DiagnosticError {
    DiagnosticError::Invalid(e.to_string())
}

/// Gap between the Brinkman velocity and the reference Darcy velocity over
/// frames at or after `t0`, sampling the reference at the nearest frame and
/// comparing on the coarser of the two grids.
pub fn velocity_gap(
    traj: &Trajectory,
    law: &PressureLaw,
    reference: &Trajectory,
    reference_law: &PressureLaw,
    t0: f64,
) -> Result<VelocityGap, DiagnosticError> {
    check_nonempty(traj)?;
    check_nonempty(reference)?;
    let (ga, gb) = (*traj.first().pressure.grid(), *reference.first().pressure.grid());
    let common = if ga.cells_per_axis() <= gb.cells_per_axis() { ga } else { gb };
    let (mut gradient_sq, mut flux_sq) = (0.0, 0.0);
    for f in traj.frames.iter().filter(|f| f.time >= t0 && f.dt > 0.0) {
        let r = reference.nearest(f.time);
        let w = restrict(&f.potential, common).map_err(invalid)?;
        let p_ref = restrict(&r.potential, common).map_err(invalid)?;
        let d = gradient(&w.zip_map(&p_ref, |a, b| a - b));
        gradient_sq += f.dt * d.inner(&d);
        let fw = w.map(|v| law.conjugate().value(v));
        let fr = p_ref.map(|v| reference_law.conjugate().value(v));
        let d = gradient(&fw.zip_map(&fr, |a, b| a - b));
        flux_sq += f.dt * d.inner(&d);
    }
    Ok(VelocityGap { gradient: gradient_sq.sqrt(), flux: flux_sq.sqrt() })
}
