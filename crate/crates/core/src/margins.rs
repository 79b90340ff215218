//! Target-class margin functions `f(c) = cos(m1·acos(c) + m3) − m2`, written
//! as functions of the cosine `c` together with `df/dc`.
//!
//! `m1 > 1, m3 = 0` is the angular (multiplicative) margin, evaluated as the
//! Chebyshev polynomial `T_m1(c)` with no monotone extension. `m2` is the
//! additive cosine margin and `m3` the additive angular margin.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from ±1 below which the derivative switches to its endpoint rule.
pub const ENDPOINT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSpec {
    pub m1: u32,
    pub m2: f64,
    pub m3: f64,
}

impl Default for MarginSpec {
    fn default() -> Self {
        Self::PLAIN
    }
}

impl MarginSpec {
    pub const PLAIN: MarginSpec = MarginSpec { m1: 1, m2: 0.0, m3: 0.0 };

    pub fn new(m1: u32, m2: f64, m3: f64) -> Result<Self> {
        let spec = Self { m1, m2, m3 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn angular(m1: u32) -> Self {
        Self { m1, m2: 0.0, m3: 0.0 }
    }

    pub fn additive_cosine(m2: f64) -> Self {
        Self { m1: 1, m2, m3: 0.0 }
    }

    pub fn additive_angle(m3: f64) -> Self {
        Self { m1: 1, m2: 0.0, m3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 < 1 {
            return Err(Error::InvalidConfig(format!("m1 must be >= 1, got {}", self.m1)));
        }
        if !(0.0..1.0).contains(&self.m2) {
            return Err(Error::InvalidConfig(format!("m2 must be in [0, 1), got {}", self.m2)));
        }
        if !(0.0..FRAC_PI_2).contains(&self.m3) {
            return Err(Error::InvalidConfig(format!("m3 must be in [0, pi/2), got {}", self.m3)));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.m1 == 1 && self.m2 == 0.0 && self.m3 == 0.0
    }
}

/// `T_n(c)` by the three-term recurrence.
pub(crate) fn chebyshev_t(n: u32, c: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => c,
        _ => {
            let (mut prev, mut cur) = (1.0, c);
            for _ in 1..n {
                let next = 2.0 * c * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `U_n(c)`, the second-kind polynomial; `T_n'(c) = n·U_{n-1}(c)`.
pub(crate) fn chebyshev_u(n: u32, c: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * c,
        _ => {
            let (mut prev, mut cur) = (1.0, 2.0 * c);
            for _ in 1..n {
                let next = 2.0 * c * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

fn sin_from_cos(c: f64) -> f64 {
    (1.0 - c * c).max(0.0).sqrt()
}

pub fn margin_forward(cos_theta: f64, spec: &MarginSpec) -> Result<f64> {
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(Error::InvalidCosine(cos_theta));
    }
    Ok(margin_value(cos_theta, spec))
}

/// Unchecked evaluation for callers that already hold a clamped cosine.
pub(crate) fn margin_value(c: f64, spec: &MarginSpec) -> f64 {
    let base = if spec.m3 == 0.0 {
        chebyshev_t(spec.m1, c)
    } else if spec.m1 == 1 {
        // cos(θ + m3) without going through acos
        c * spec.m3.cos() - sin_from_cos(c) * spec.m3.sin()
    } else {
        (f64::from(spec.m1) * c.acos() + spec.m3).cos()
    };
    base - spec.m2
}

/// `df/dc = m1·sin(m1·θ + m3) / sin θ`.
///
/// With `m3 = 0` this is the polynomial `m1·U_{m1−1}(c)`, exact up to and
/// including `c = ±1`. With `m3 > 0` the quotient is unbounded at the
/// endpoints, so inputs within [`ENDPOINT_EPS`] of ±1 are evaluated at
/// `±(1 − ENDPOINT_EPS)`.
pub fn margin_backward(cos_theta: f64, spec: &MarginSpec) -> f64 {
    let c = cos_theta.clamp(-1.0, 1.0);
    if spec.m3 == 0.0 {
        return match spec.m1 {
            1 => 1.0,
            n => f64::from(n) * chebyshev_u(n - 1, c),
        };
    }
    let c = c.clamp(-1.0 + ENDPOINT_EPS, 1.0 - ENDPOINT_EPS);
    let sin_theta = sin_from_cos(c);
    if spec.m1 == 1 {
        spec.m3.cos() + c * spec.m3.sin() / sin_theta
    } else {
        let m1 = f64::from(spec.m1);
        m1 * (m1 * c.acos() + spec.m3).sin() / sin_theta
    }
}
