//! Problem coefficients: the potential V, the nonlinearity weight Gamma and
//! the exponent p of the radial equation
//!
//! ```text
//! -u'' - (f'/f) u' - V(r) u = Gamma(r) |u|^(p-2) u
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{RadialGeometry, ScalarFn};
use crate::interp::MonotoneCubic;

/// A scalar radial coefficient with an evaluable derivative and a limit at
/// infinity.
#[derive(Clone)]
pub enum RadialProfile {
    Zero,
    Constant(f64),
    /// base + amp * exp(-rate * r)
    ConstPlusExp { base: f64, amp: f64, rate: f64 },
    Table(MonotoneCubic),
    Custom {
        value: ScalarFn,
        deriv: ScalarFn,
        limit: f64,
        label: String,
    },
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl RadialProfile {
    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        limit: f64,
        label: &str,
    ) -> Self {
        RadialProfile::Custom {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            limit,
            label: label.to_string(),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Constant(c) => *c,
            RadialProfile::ConstPlusExp { base, amp, rate } => base + amp * (-rate * r).exp(),
            RadialProfile::Table(t) => t.value(r),
            RadialProfile::Custom { value, .. } => value(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Zero | RadialProfile::Constant(_) => 0.0,
            RadialProfile::ConstPlusExp { amp, rate, .. } => -rate * amp * (-rate * r).exp(),
            RadialProfile::Table(t) => t.derivative(r),
            RadialProfile::Custom { deriv, .. } => deriv(r),
        }
    }

    pub fn limit(&self) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Constant(c) => *c,
            RadialProfile::ConstPlusExp { base, .. } => *base,
            RadialProfile::Table(t) => t.last_value(),
            RadialProfile::Custom { limit, .. } => *limit,
        }
    }

    /// Identically-zero flag; used to skip the |Gamma'|/Gamma hypothesis
    /// check for the linear problem.
    pub fn is_zero(&self) -> bool {
        matches!(self, RadialProfile::Zero)
    }

    pub fn label(&self) -> String {
        match self {
            RadialProfile::Zero => "zero".into(),
            RadialProfile::Constant(c) => format!("const:{c}"),
            RadialProfile::ConstPlusExp { base, amp, rate } => {
                format!("constexp:{base},{amp},{rate}")
            }
            RadialProfile::Table(t) => format!("table[{},{}]", t.x_min(), t.x_max()),
            RadialProfile::Custom { label, .. } => format!("custom({label})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    pub v: RadialProfile,
    pub gamma: RadialProfile,
    pub p: f64,
    /// Spectral parameter, present when V encodes a Helmholtz problem
    /// V = kappa^2/4 + lambda^2.
    pub lambda: Option<f64>,
}

impl CoefficientProfile {
    pub fn new(v: RadialProfile, gamma: RadialProfile, p: f64) -> Result<Self> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::InvalidHypothesis(format!(
                "exponent p must satisfy p > 2, got {p}"
            )));
        }
        Ok(CoefficientProfile {
            v,
            gamma,
            p,
            lambda: None,
        })
    }

    /// The Helmholtz problem for a geometry: V = kappa^2/4 + lambda^2.
    pub fn helmholtz(geom: &RadialGeometry, lambda: f64, gamma: RadialProfile, p: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidHypothesis(format!(
                "spectral parameter lambda must be positive, got {lambda}"
            )));
        }
        let kappa = geom.kappa();
        let mut c = Self::new(
            RadialProfile::Constant(0.25 * kappa * kappa + lambda * lambda),
            gamma,
            p,
        )?;
        c.lambda = Some(lambda);
        Ok(c)
    }

    /// Linear problem (Gamma identically zero); p is a dummy satisfying p > 2.
    pub fn linear(v: RadialProfile) -> Self {
        CoefficientProfile {
            v,
            gamma: RadialProfile::Zero,
            p: 3.0,
            lambda: None,
        }
    }

    pub fn p_dual(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn v_at(&self, r: f64) -> f64 {
        self.v.value(r)
    }

    pub fn dv_at(&self, r: f64) -> f64 {
        self.v.derivative(r)
    }

    pub fn gamma_at(&self, r: f64) -> f64 {
        self.gamma.value(r)
    }

    pub fn dgamma_at(&self, r: f64) -> f64 {
        self.gamma.derivative(r)
    }

    pub fn v_inf(&self) -> f64 {
        self.v.limit()
    }

    pub fn gamma_inf(&self) -> f64 {
        self.gamma.limit()
    }
}

/// sign(u) |u|^q, used for nonlinearities with non-integer exponents: stays
/// real and odd.
pub fn odd_pow(u: f64, q: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_exponent() {
        let c = CoefficientProfile::new(
            RadialProfile::Constant(5.0),
            RadialProfile::Constant(1.0),
            3.0,
        )
        .unwrap();
        assert!((c.p_dual() - 1.5).abs() < 1e-15);
        assert!(CoefficientProfile::new(
            RadialProfile::Constant(5.0),
            RadialProfile::Zero,
            2.0
        )
        .is_err());
    }

    #[test]
    fn helmholtz_potential() {
        let h3 = RadialGeometry::hyperbolic(3);
        let c = CoefficientProfile::helmholtz(&h3, 2.0, RadialProfile::Zero, 3.0).unwrap();
        assert!((c.v_at(7.0) - 5.0).abs() < 1e-15);
        assert_eq!(c.lambda, Some(2.0));
    }

    #[test]
    fn const_plus_exp() {
        let v = RadialProfile::ConstPlusExp {
            base: 2.0,
            amp: 1.0,
            rate: 1.0,
        };
        assert!((v.value(0.0) - 3.0).abs() < 1e-15);
        assert!((v.derivative(1.0) + (-1.0f64).exp()).abs() < 1e-15);
        assert!((v.limit() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn odd_pow_is_odd() {
        assert_eq!(odd_pow(0.0, 1.5), 0.0);
        assert!((odd_pow(-2.0, 2.0) + 4.0).abs() < 1e-15);
        assert!((odd_pow(2.0, 0.5) - 2.0f64.sqrt()).abs() < 1e-15);
    }
}
