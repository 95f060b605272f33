use super::{ConvexError, Interval};

/// Value of a power-type function on the negative half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeSide {
    Infinite,
    Zero,
}

/// Analytic convex functions with analytic conjugates.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `scale * a^2 / 2` on the whole line.
    Quadratic { scale: f64 },
    /// `scale * a^q / q` for `a >= 0`, with `q = exponent > 1`.
    Power { exponent: f64, scale: f64, negative: NegativeSide },
    /// `-nu (a + ln(1 - a))` on `[0, 1)`.
    LogBarrier { nu: f64 },
    /// `b_+ - nu ln(1 + b_+ / nu)`, the conjugate of the log barrier.
    LogBarrierDual { nu: f64 },
    /// `0` on `[0, 1]`, `+inf` elsewhere.
    UnitBox,
    /// `max(b, 0)`.
    PositivePart,
    /// `slope * a` on the whole line.
    Linear { slope: f64 },
}

impl ClosedForm {
    pub fn value(&self, a: f64) -> f64 {
        match *self {
            Self::Quadratic { scale } => 0.5 * scale * a * a,
            Self::Power { exponent, scale, negative } => {
                if a >= 0.0 {
                    scale * a.powf(exponent) / exponent
                } else {
                    match negative {
                        NegativeSide::Infinite => f64::INFINITY,
                        NegativeSide::Zero => 0.0,
                    }
                }
            }
            Self::LogBarrier { nu } => {
                if (0.0..1.0).contains(&a) {
                    -nu * (a + (-a).ln_1p())
                } else {
                    f64::INFINITY
                }
            }
            Self::LogBarrierDual { nu } => {
                if a > 0.0 {
                    a - nu * (a / nu).ln_1p()
                } else {
                    0.0
                }
            }
            Self::UnitBox => {
                if (0.0..=1.0).contains(&a) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::PositivePart => a.max(0.0),
            Self::Linear { slope } => slope * a,
        }
    }

    pub fn subdifferential(&self, a: f64) -> Result<Interval, ConvexError> {
        if a.is_nan() {
            return Err(ConvexError::OutsideDomain { a });
        }
        let out = |a| Err(ConvexError::OutsideDomain { a });
        Ok(match *self {
            Self::Quadratic { scale } => Interval::point(scale * a),
            Self::Power { exponent, scale, negative } => {
                if a > 0.0 {
                    Interval::point(scale * a.powf(exponent - 1.0))
                } else {
                    match (negative, a == 0.0) {
                        (NegativeSide::Infinite, true) => Interval::new(f64::NEG_INFINITY, 0.0),
                        (NegativeSide::Infinite, false) => return out(a),
                        (NegativeSide::Zero, _) => Interval::point(0.0),
                    }
                }
            }
            Self::LogBarrier { nu } => {
                if a == 0.0 {
                    Interval::new(f64::NEG_INFINITY, 0.0)
                } else if a > 0.0 && a < 1.0 {
                    Interval::point(nu * a / (1.0 - a))
                } else {
                    return out(a);
                }
            }
            Self::LogBarrierDual { nu } => Interval::point(if a > 0.0 { a / (a + nu) } else { 0.0 }),
            Self::UnitBox => {
                if a == 0.0 {
                    Interval::new(f64::NEG_INFINITY, 0.0)
                } else if a == 1.0 {
                    Interval::new(0.0, f64::INFINITY)
                } else if a > 0.0 && a < 1.0 {
                    Interval::point(0.0)
                } else {
                    return out(a);
                }
            }
            Self::PositivePart => {
                if a > 0.0 {
                    Interval::point(1.0)
                } else if a < 0.0 {
                    Interval::point(0.0)
                } else {
                    Interval::new(0.0, 1.0)
                }
            }
            Self::Linear { slope } => Interval::point(slope),
        })
    }

    pub fn second_derivative(&self, a: f64) -> f64 {
        match *self {
            Self::Quadratic { scale } => scale,
            Self::Power { exponent, scale, .. } => {
                if a > 0.0 {
                    scale * (exponent - 1.0) * a.powf(exponent - 2.0)
                } else if a == 0.0 {
                    match exponent.partial_cmp(&2.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => scale,
                        _ => 0.0,
                    }
                } else {
                    0.0
                }
            }
            Self::LogBarrier { nu } => {
                if (0.0..1.0).contains(&a) {
                    nu / ((1.0 - a) * (1.0 - a))
                } else {
                    0.0
                }
            }
            Self::LogBarrierDual { nu } => {
                if a >= 0.0 {
                    nu / ((a + nu) * (a + nu))
                } else {
                    0.0
                }
            }
            Self::UnitBox | Self::PositivePart | Self::Linear { .. } => 0.0,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Self::Power { negative: NegativeSide::Infinite, .. } => (0.0, f64::INFINITY),
            Self::LogBarrier { .. } => (0.0, 1.0),
            Self::UnitBox => (0.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn conjugate(&self) -> Result<Self, ConvexError> {
        Ok(match *self {
            Self::Quadratic { scale } if scale > 0.0 => Self::Quadratic { scale: 1.0 / scale },
            Self::Quadratic { .. } | Self::Linear { .. } => {
                return Err(ConvexError::Degenerate("conjugate is finite at a single point"))
            }
            Self::Power { exponent, scale, negative } => {
                if !(exponent > 1.0 && scale > 0.0) {
                    return Err(ConvexError::InvalidParameter(format!(
                        "power exponent {exponent} scale {scale}"
                    )));
                }
                Self::Power {
                    exponent: exponent / (exponent - 1.0),
                    scale: scale.powf(-1.0 / (exponent - 1.0)),
                    negative: match negative {
                        NegativeSide::Infinite => NegativeSide::Zero,
                        NegativeSide::Zero => NegativeSide::Infinite,
                    },
                }
            }
            Self::LogBarrier { nu } => Self::LogBarrierDual { nu },
            Self::LogBarrierDual { nu } => Self::LogBarrier { nu },
            Self::UnitBox => Self::PositivePart,
            Self::PositivePart => Self::UnitBox,
        })
    }
}
