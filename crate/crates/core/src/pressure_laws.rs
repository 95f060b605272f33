//! Concrete pressure laws (energy, viscosity, growth) and validators for the
//! structural assumptions on them and on initial data.

use crate::checks::CheckReport;
use crate::convex_energy::{ClosedForm, ConvexScalarFunction, NegativeSide};
use crate::field_grid::ScalarField;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the incompressible law has a multivalued pressure")]
    Multivalued,
    #[error("density {value} at cell {cell} leaves the interior of the energy domain")]
    DomainGuard { cell: usize, value: f64 },
}

/// Pressure-dependent growth rate `G(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `g0 (1 - p / p_h)`.
    Linear { p_h: f64, g0: f64 },
    /// `max(g0 (1 - p / p_h), 0)`.
    Clamped { p_h: f64, g0: f64 },
    /// No growth; `p_h` is kept only for the pressure bound.
    Zero { p_h: f64 },
}

impl Growth {
    pub fn linear(p_h: f64, g0: f64) -> Result<Self, LawError> {
        check_positive("p_H", p_h)?;
        check_positive("g0", g0)?;
        Ok(Self::Linear { p_h, g0 })
    }

    pub fn clamped(p_h: f64, g0: f64) -> Result<Self, LawError> {
        check_positive("p_H", p_h)?;
        check_positive("g0", g0)?;
        Ok(Self::Clamped { p_h, g0 })
    }

    pub fn zero(p_h: f64) -> Result<Self, LawError> {
        check_positive("p_H", p_h)?;
        Ok(Self::Zero { p_h })
    }

    pub fn rate(&self, p: f64) -> f64 {
        match *self {
            Self::Linear { p_h, g0 } => g0 * (1.0 - p / p_h),
            Self::Clamped { p_h, g0 } => (g0 * (1.0 - p / p_h)).max(0.0),
            Self::Zero { .. } => 0.0,
        }
    }

    pub fn homeostatic_pressure(&self) -> f64 {
        match *self {
            Self::Linear { p_h, .. } | Self::Clamped { p_h, .. } | Self::Zero { p_h } => p_h,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero { .. })
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), LawError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LawError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Exponent convention of the power law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `f(a) = a^(g+1) / (g+1)`, so `p = rho^g`.
    #[default]
    PressureIsPower,
    /// `f(a) = a^g / g`, so `p = rho^(g-1)`.
    EnergyIsPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    Power { gamma: f64, normalization: Normalization },
    Log,
    Incompressible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureLaw {
    kind: LawKind,
    energy: ConvexScalarFunction,
    conjugate: ConvexScalarFunction,
    nu: f64,
    growth: Growth,
    a0: f64,
}

/// Log-law densities at or above this level abort a run.
pub const LOG_DENSITY_GUARD: f64 = 1.0 - 1e-12;

impl PressureLaw {
    fn build(kind: LawKind, energy: ClosedForm, nu: f64, growth: Growth, a0: f64) -> Result<Self, LawError> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(LawError::InvalidParameter(format!("nu must be nonnegative, got {nu}")));
        }
        let conjugate = energy.conjugate().map_err(|e| LawError::InvalidParameter(e.to_string()))?;
        Ok(Self { kind, energy: energy.into(), conjugate: conjugate.into(), nu, growth, a0 })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn energy(&self) -> &ConvexScalarFunction {
        &self.energy
    }

    pub fn conjugate(&self) -> &ConvexScalarFunction {
        &self.conjugate
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn p_h(&self) -> f64 {
        self.growth.homeostatic_pressure()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self, LawError> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(LawError::InvalidParameter(format!("nu must be nonnegative, got {nu}")));
        }
        self.nu = nu;
        Ok(self)
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    /// `B_p = max(p_H, B)`.
    pub fn pressure_bound(&self, b: f64) -> f64 {
        self.p_h().max(b)
    }

    /// `sup df*(b)`, the largest density compatible with pressure `b`.
    pub fn density_at_pressure(&self, b: f64) -> f64 {
        match self.kind {
            LawKind::Incompressible => 1.0,
            _ => self.conjugate.subdifferential(b.max(0.0)).map(|s| s.hi).unwrap_or(0.0),
        }
    }

    /// A-priori density cap `sup df*(B_p)` for data bounded by `b`.
    pub fn density_cap(&self, b: f64) -> f64 {
        self.density_at_pressure(self.pressure_bound(b))
    }

    /// Single-valued pressure `f'(rho)`.
    pub fn pressure(&self, rho: f64) -> Result<f64, LawError> {
        match self.kind {
            LawKind::Power { gamma, normalization } => {
                let e = match normalization {
                    Normalization::PressureIsPower => gamma,
                    Normalization::EnergyIsPower => gamma - 1.0,
                };
                Ok(rho.max(0.0).powf(e))
            }
            LawKind::Log => {
                if rho >= LOG_DENSITY_GUARD {
                    return Err(LawError::DomainGuard { cell: 0, value: rho });
                }
                let r = rho.max(0.0);
                Ok(self.log_nu() * r / (1.0 - r))
            }
            LawKind::Incompressible => Err(LawError::Multivalued),
        }
    }

    fn log_nu(&self) -> f64 {
        match self.energy {
            ConvexScalarFunction::Closed(ClosedForm::LogBarrier { nu }) => nu,
            _ => self.nu,
        }
    }

    /// `(f*)'(b)`, the density carried by pressure level `b`.
    pub fn density(&self, b: f64) -> f64 {
        self.conjugate.derivative(b).unwrap_or(0.0)
    }

    /// `(f*)''(b)`.
    pub fn density_slope(&self, b: f64) -> f64 {
        self.conjugate.second_derivative(b)
    }

    /// Pressure field of a density field.
    pub fn pressure_field(&self, rho: &ScalarField) -> Result<ScalarField, LawError> {
        let mut out = ScalarField::zeros(*rho.grid());
        for (k, (o, &r)) in out.values_mut().iter_mut().zip(rho.values()).enumerate() {
            *o = self.pressure(r).map_err(|e| match e {
                LawError::DomainGuard { value, .. } => LawError::DomainGuard { cell: k, value },
                other => other,
            })?;
        }
        Ok(out)
    }

    /// Structural checks on energy and growth.
    pub fn validate_assumptions(&self) -> CheckReport {
        let mut r = CheckReport::new();
        let g = self.growth;
        let p_h = g.homeostatic_pressure();
        r.at_least("growth_positive_at_zero", g.rate(0.0), f64::MIN_POSITIVE);
        r.at_most("growth_zero_at_p_h", g.rate(p_h).abs(), 1e-12);
        let nonincreasing = (0..200).all(|k| {
            let p = 2.0 * p_h * k as f64 / 200.0;
            g.rate(p + 2.0 * p_h / 200.0) <= g.rate(p)
        });
        r.flag("growth_nonincreasing", nonincreasing);
        let f = &self.energy;
        r.flag("infinite_on_negatives", f.value(-1e-6) == f64::INFINITY);
        let small = 1e-6;
        r.at_most("superlinear_at_zero", f.value(small) / small, 1e-3);
        let large = 1e6 * self.a0.max(1.0);
        let ratio = f.value(large) / large;
        r.at_least("superlinear_at_infinity", ratio, 1e3);
        r.flag("a0_in_domain", self.a0 > 0.0 && f.value(self.a0).is_finite());
        r
    }
}

/// `f(a) = a^(g+1)/(g+1)` (default) or `a^g/g`, with `g >= 1`.
pub fn power_law(gamma: f64, nu: f64, growth: Growth) -> Result<PressureLaw, LawError> {
    power_law_with(gamma, nu, growth, Normalization::PressureIsPower)
}

pub fn power_law_with(
    gamma: f64,
    nu: f64,
    growth: Growth,
    normalization: Normalization,
) -> Result<PressureLaw, LawError> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(LawError::InvalidParameter(format!("gamma must be at least 1, got {gamma}")));
    }
    let exponent = match normalization {
        Normalization::PressureIsPower => gamma + 1.0,
        Normalization::EnergyIsPower if gamma > 1.0 => gamma,
        Normalization::EnergyIsPower => {
            return Err(LawError::InvalidParameter("energy a^g/g needs gamma > 1".into()))
        }
    };
    let energy = ClosedForm::Power { exponent, scale: 1.0, negative: NegativeSide::Infinite };
    PressureLaw::build(LawKind::Power { gamma, normalization }, energy, nu, growth, 1.0)
}

/// Power law on the joint schedule `gamma = 1/nu`.
pub fn joint_power_law(nu: f64, growth: Growth) -> Result<PressureLaw, LawError> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(LawError::InvalidParameter(format!("joint schedule needs 0 < nu <= 1, got {nu}")));
    }
    power_law(1.0 / nu, nu, growth)
}

/// `f(a) = -nu (a + ln(1 - a))`, with pressure `nu a / (1 - a)`.
pub fn log_law(nu: f64, growth: Growth) -> Result<PressureLaw, LawError> {
    check_positive("nu", nu)?;
    PressureLaw::build(LawKind::Log, ClosedForm::LogBarrier { nu }, nu, growth, 0.5)
}

/// Hard congestion constraint `rho <= 1`; only a Darcy-side reference.
pub fn incompressible_law(growth: Growth) -> Result<PressureLaw, LawError> {
    PressureLaw::build(LawKind::Incompressible, ClosedForm::UnitBox, 0.0, growth, 1.0)
}

pub fn linear_growth(p_h: f64, g0: f64) -> Result<Growth, LawError> {
    Growth::linear(p_h, g0)
}

/// Species densities at `t = 0` together with the pressure level `B` that
/// bounds them.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub density_per_species: Vec<ScalarField>,
    pub bound_b: f64,
}

impl InitialData {
    pub fn single(rho: ScalarField, bound_b: f64) -> Self {
        Self { density_per_species: vec![rho], bound_b }
    }

    pub fn total(&self) -> ScalarField {
        let mut it = self.density_per_species.iter();
        let first = it.next().expect("at least one species").clone();
        it.fold(first, |acc, f| acc.zip_map(f, |a, b| a + b))
    }

    pub fn mass(&self) -> f64 {
        self.total().integral()
    }
}

/// Checks that the data are finite, nonnegative and bounded by `sup df*(B)`.
pub fn validate_well_prepared(data: &InitialData, law: &PressureLaw) -> CheckReport {
    let mut r = CheckReport::new();
    let finite = data.density_per_species.iter().all(|f| f.values().iter().all(|v| v.is_finite()));
    r.flag("finite", finite && data.bound_b.is_finite());
    r.flag("nonnegative", data.density_per_species.iter().all(ScalarField::is_nonnegative));
    if data.density_per_species.is_empty() {
        r.flag("has_species", false);
        return r;
    }
    let total = data.total();
    let cap = law.density_at_pressure(data.bound_b);
    r.at_most("max_density", total.max(), cap);
    r.info("mass", total.integral());
    r.info("linf", total.max_abs());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_grid::Grid;

    fn g() -> Growth {
        Growth::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn power_law_examples() {
        let lin = power_law(1.0, 0.1, g()).unwrap();
        assert_eq!(lin.energy().value(3.0), 4.5);
        assert_eq!(lin.pressure(0.7).unwrap(), 0.7);
        let cubic = power_law(3.0, 0.1, g()).unwrap();
        assert_eq!(cubic.pressure(2.0).unwrap(), 8.0);
        // brute-force sup of a b - a^4/4 against 3/4 b^(4/3)
        for b in [0.5f64, 1.0, 3.0] {
            let sup = (0..=300_000).map(|k| k as f64 * 1e-5).map(|a| a * b - a.powi(4) / 4.0).fold(f64::MIN, f64::max);
            assert!((cubic.conjugate().value(b) - sup).abs() < 1e-8);
            assert!((cubic.conjugate().value(b) - 0.75 * b.powf(4.0 / 3.0)).abs() < 1e-12);
        }
        assert!(power_law(0.5, 0.1, g()).is_err());
    }

    #[test]
    fn alternate_normalization() {
        let law = power_law_with(3.0, 0.1, g(), Normalization::EnergyIsPower).unwrap();
        assert_eq!(law.energy().value(2.0), 8.0 / 3.0);
        assert_eq!(law.pressure(2.0).unwrap(), 4.0);
        assert!(power_law_with(1.0, 0.1, g(), Normalization::EnergyIsPower).is_err());
    }

    #[test]
    fn log_law_examples() {
        let law = log_law(1.0, g()).unwrap();
        assert_eq!(law.pressure(0.5).unwrap(), 1.0);
        assert!(law.pressure(1e-9).unwrap() < 1e-8);
        assert_eq!(law.energy().value(1.0), f64::INFINITY);
        assert_eq!(law.energy().value(1.5), f64::INFINITY);
        // inverse a = p / (p + nu), checked by bisection on the pressure
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if law.pressure(mid).unwrap() < 1.0 { lo = mid } else { hi = mid }
        }
        assert!((law.density(1.0) - 0.5).abs() < 1e-12);
        assert!((lo - 0.5).abs() < 1e-12);
        assert!(log_law(0.0, g()).is_err());
    }

    #[test]
    fn incompressible_examples() {
        let law = incompressible_law(g()).unwrap();
        assert_eq!(law.energy().value(0.5), 0.0);
        assert_eq!(law.energy().subdifferential(0.5).unwrap().hi, 0.0);
        assert_eq!(law.energy().value(1.5), f64::INFINITY);
        assert_eq!(law.conjugate().value(2.0), 2.0);
        assert_eq!(law.pressure(0.5), Err(LawError::Multivalued));
    }

    #[test]
    fn linear_growth_examples() {
        let gr = linear_growth(2.0, 3.0).unwrap();
        assert_eq!(gr.rate(0.0), 3.0);
        assert_eq!(gr.rate(2.0), 0.0);
        assert_eq!(gr.rate(4.0), -3.0);
        let cl = Growth::clamped(2.0, 3.0).unwrap();
        assert_eq!(cl.rate(4.0), 0.0);
    }

    #[test]
    fn catalog_laws_pass_their_validators() {
        for law in [
            power_law(1.0, 0.1, g()).unwrap(),
            power_law(3.0, 0.1, g()).unwrap(),
            power_law(80.0, 0.0, g()).unwrap(),
            log_law(0.5, g()).unwrap(),
            incompressible_law(g()).unwrap(),
            power_law(3.0, 0.1, Growth::clamped(1.0, 1.0).unwrap()).unwrap(),
        ] {
            let r = law.validate_assumptions();
            assert!(r.passed(), "{:?}\n{r}", law.kind());
        }
    }

    #[test]
    fn well_prepared_examples() {
        let grid = Grid::line(16, 1.0).unwrap();
        let cubic = power_law(3.0, 0.1, g()).unwrap();
        let zero = InitialData::single(ScalarField::zeros(grid), 1.0);
        let r = validate_well_prepared(&zero, &cubic);
        assert!(r.passed());
        assert_eq!(r.get("mass").unwrap().value, 0.0);
        let ones = InitialData::single(ScalarField::constant(grid, 1.0), 1.0);
        assert!(validate_well_prepared(&ones, &cubic).passed());
        let log = log_law(1.0, g()).unwrap();
        let dense = InitialData::single(ScalarField::constant(grid, 0.9), 1.0);
        let r = validate_well_prepared(&dense, &log);
        assert!(!r.passed());
        assert_eq!(r.get("max_density").unwrap().limit, 0.5);
    }

    #[test]
    fn joint_schedule_tends_to_box() {
        // f_nu -> f_0 away from a = 1 as gamma = 1/nu grows
        let mut prev_in = f64::INFINITY;
        let mut prev_out = 0.0;
        for nu in [0.5, 0.1, 0.02, 0.005] {
            let law = joint_power_law(nu, g()).unwrap();
            let inside = law.energy().value(0.8);
            let outside = law.energy().value(1.2);
            assert!(inside < prev_in && outside > prev_out);
            prev_in = inside;
            prev_out = outside;
        }
        assert!(prev_in < 1e-15);
        assert!(prev_out > 1e10);
    }
}
