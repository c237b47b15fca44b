//! Rotationally symmetric manifold models.
//!
//! A model is described by its radial volume density f(r): the radial part of
//! the Laplace-Beltrami operator is d²/dr² + (f'/f) d/dr.  Built-in models:
//!
//! ```text
//! hyperbolic H^N   f = sinh(r)^(N-1)                 kappa = N-1
//! euclidean  R^N   f = r^(N-1)                       kappa = 0
//! Damek-Ricci      f = sinh^(m+k)(r/2) cosh^k(r/2)   kappa = (m+2k)/2
//! ```
//!
//! `kappa` is the limit of the log-derivative ell(r) = f'/f at infinity and
//! `d0` the limit of r*ell(r) at the origin (strength of the removable
//! singularity; equals N-1 for the space forms, m+k for Damek-Ricci).

use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum RadialGeometry {
    Hyperbolic {
        dim: u32,
    },
    Euclidean {
        dim: u32,
    },
    DamekRicci {
        m: u32,
        k: u32,
    },
    /// User-supplied model.  `log_deriv_prime` (the second derivative of
    /// log f) must be given explicitly; it is never differenced numerically.
    Custom {
        density: ScalarFn,
        log_deriv: ScalarFn,
        log_deriv_prime: ScalarFn,
        kappa: f64,
        d0: f64,
        label: String,
    },
}

impl std::fmt::Debug for RadialGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl RadialGeometry {
    pub fn hyperbolic(dim: u32) -> Self {
        assert!(dim >= 2, "hyperbolic model needs dimension >= 2");
        RadialGeometry::Hyperbolic { dim }
    }

    pub fn euclidean(dim: u32) -> Self {
        assert!(dim >= 2, "euclidean model needs dimension >= 2");
        RadialGeometry::Euclidean { dim }
    }

    pub fn damek_ricci(m: u32, k: u32) -> Self {
        assert!(m >= 1 && k >= 1, "Damek-Ricci model needs m, k >= 1");
        RadialGeometry::DamekRicci { m, k }
    }

    pub fn label(&self) -> String {
        match self {
            RadialGeometry::Hyperbolic { dim } => format!("hyperbolic({dim})"),
            RadialGeometry::Euclidean { dim } => format!("euclidean({dim})"),
            RadialGeometry::DamekRicci { m, k } => format!("damekricci({m},{k})"),
            RadialGeometry::Custom { label, .. } => format!("custom({label})"),
        }
    }

    /// Dimension when the model has one (space forms and Damek-Ricci).
    pub fn dimension(&self) -> Option<u32> {
        match self {
            RadialGeometry::Hyperbolic { dim } | RadialGeometry::Euclidean { dim } => Some(*dim),
            RadialGeometry::DamekRicci { m, k } => Some(m + k + 1),
            RadialGeometry::Custom { .. } => None,
        }
    }

    /// Volume density f(r).  Internal fast path; assumes r >= 0 finite.
    pub fn density(&self, r: f64) -> f64 {
        match self {
            RadialGeometry::Hyperbolic { dim } => r.sinh().powi(*dim as i32 - 1),
            RadialGeometry::Euclidean { dim } => r.powi(*dim as i32 - 1),
            RadialGeometry::DamekRicci { m, k } => {
                let h = 0.5 * r;
                h.sinh().powi((m + k) as i32) * h.cosh().powi(*k as i32)
            }
            RadialGeometry::Custom { density, .. } => density(r),
        }
    }

    /// Log-derivative ell(r) = f'(r)/f(r).  Assumes r > 0.
    pub fn ell(&self, r: f64) -> f64 {
        match self {
            RadialGeometry::Hyperbolic { dim } => (*dim as f64 - 1.0) / r.tanh(),
            RadialGeometry::Euclidean { dim } => (*dim as f64 - 1.0) / r,
            RadialGeometry::DamekRicci { m, k } => {
                let h = 0.5 * r;
                0.5 * (m + k) as f64 / h.tanh() + 0.5 * *k as f64 * h.tanh()
            }
            RadialGeometry::Custom { log_deriv, .. } => log_deriv(r),
        }
    }

    /// (log f)''(r).  Assumes r > 0.
    pub fn ell_prime(&self, r: f64) -> f64 {
        match self {
            RadialGeometry::Hyperbolic { dim } => {
                let s = r.sinh();
                -(*dim as f64 - 1.0) / (s * s)
            }
            RadialGeometry::Euclidean { dim } => -(*dim as f64 - 1.0) / (r * r),
            RadialGeometry::DamekRicci { m, k } => {
                let h = 0.5 * r;
                let sh = h.sinh();
                let ch = h.cosh();
                -0.25 * (m + k) as f64 / (sh * sh) + 0.25 * *k as f64 / (ch * ch)
            }
            RadialGeometry::Custom {
                log_deriv_prime, ..
            } => log_deriv_prime(r),
        }
    }

    /// Limit of ell(r) as r -> infinity.
    pub fn kappa(&self) -> f64 {
        match self {
            RadialGeometry::Hyperbolic { dim } => *dim as f64 - 1.0,
            RadialGeometry::Euclidean { .. } => 0.0,
            RadialGeometry::DamekRicci { m, k } => 0.5 * (m + 2 * k) as f64,
            RadialGeometry::Custom { kappa, .. } => *kappa,
        }
    }

    /// Limit of r*ell(r) as r -> 0+.
    pub fn d0(&self) -> f64 {
        match self {
            RadialGeometry::Hyperbolic { dim } | RadialGeometry::Euclidean { dim } => {
                *dim as f64 - 1.0
            }
            RadialGeometry::DamekRicci { m, k } => (m + k) as f64,
            RadialGeometry::Custom { d0, .. } => *d0,
        }
    }

    /// Checked evaluation of the volume density.
    pub fn volume_density(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::NonFiniteInput(r));
        }
        Ok(self.density(r))
    }

    /// Checked evaluation of ell(r) = f'/f; singular at the origin whenever
    /// d0 > 0.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::NonFiniteInput(r));
        }
        if r <= 0.0 && self.d0() > 0.0 {
            return Err(Error::OriginSingular { d0: self.d0() });
        }
        Ok(self.ell(r))
    }
}

/// Surface area of the unit sphere S^(d) in R^(d+1).
pub fn sphere_area(d: u32) -> f64 {
    // |S^d| = 2 pi^((d+1)/2) / Gamma((d+1)/2)
    2.0 * std::f64::consts::PI.powf(0.5 * (d as f64 + 1.0)) / gamma_half_integer(d + 1)
}

/// Gamma(n/2) for positive integer n, exact at half-integers.
pub fn gamma_half_integer(n: u32) -> f64 {
    assert!(n >= 1);
    if n % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = n / 2;
        (1..k).fold(1.0, |acc, j| acc * j as f64)
    } else {
        // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
        let k = (n - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for j in 1..=k {
            v *= j as f64 - 0.5;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_examples() {
        let h3 = RadialGeometry::hyperbolic(3);
        assert!((h3.volume_density(1.0).unwrap() - 1.0f64.sinh().powi(2)).abs() < 1e-12);
        assert!((h3.volume_density(1.0).unwrap() - 1.381098).abs() < 1e-6);

        let dr = RadialGeometry::damek_ricci(2, 1);
        assert_eq!(dr.volume_density(0.0).unwrap(), 0.0);

        let e3 = RadialGeometry::euclidean(3);
        assert_eq!(e3.volume_density(2.0).unwrap(), 4.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        let h3 = RadialGeometry::hyperbolic(3);
        assert!(matches!(
            h3.volume_density(f64::NAN),
            Err(Error::NonFiniteInput(_))
        ));
        assert!(matches!(
            h3.volume_density(f64::INFINITY),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn kappa_limits() {
        let h3 = RadialGeometry::hyperbolic(3);
        assert_eq!(h3.kappa(), 2.0);
        assert!((h3.ell(50.0) - 2.0).abs() < 1e-12);

        let dr = RadialGeometry::damek_ricci(2, 1);
        assert_eq!(dr.kappa(), 2.0);
        assert!((dr.ell(50.0) - 2.0).abs() < 1e-10);

        let e5 = RadialGeometry::euclidean(5);
        assert_eq!(e5.kappa(), 0.0);
        assert!(e5.ell(50.0) < 0.1);
    }

    #[test]
    fn origin_singularity() {
        let h2 = RadialGeometry::hyperbolic(2);
        assert!(matches!(
            h2.log_derivative(0.0),
            Err(Error::OriginSingular { .. })
        ));
        // d0 consistency: r*ell(r) -> d0 at r = 1e-4
        for geom in [
            RadialGeometry::hyperbolic(3),
            RadialGeometry::hyperbolic(2),
            RadialGeometry::euclidean(4),
            RadialGeometry::damek_ricci(2, 1),
        ] {
            let r = 1e-4;
            assert!(
                (r * geom.ell(r) - geom.d0()).abs() < 1e-6,
                "d0 mismatch for {}",
                geom.label()
            );
        }
    }

    #[test]
    fn log_derivative_matches_difference_quotient() {
        let geoms = [
            RadialGeometry::hyperbolic(2),
            RadialGeometry::hyperbolic(3),
            RadialGeometry::hyperbolic(5),
            RadialGeometry::euclidean(3),
            RadialGeometry::damek_ricci(2, 1),
            RadialGeometry::damek_ricci(3, 2),
        ];
        for geom in &geoms {
            let mut r: f64 = 0.1;
            while r <= 50.0 {
                let h = 1e-5 * r.max(1.0);
                let quot = ((geom.density(r + h)).ln() - (geom.density(r - h)).ln()) / (2.0 * h);
                let ell = geom.ell(r);
                assert!(
                    (ell - quot).abs() <= 1e-6 * ell.abs().max(1.0),
                    "{} at r={r}: {ell} vs {quot}",
                    geom.label()
                );
                // ell' against difference quotient of ell
                let quot2 = (geom.ell(r + h) - geom.ell(r - h)) / (2.0 * h);
                assert!(
                    (geom.ell_prime(r) - quot2).abs() <= 1e-5 * quot2.abs().max(1.0),
                    "{} ell' at r={r}",
                    geom.label()
                );
                r += 2.4799;
            }
        }
    }

    #[test]
    fn ell_monotone_toward_kappa() {
        for geom in [
            RadialGeometry::hyperbolic(3),
            RadialGeometry::damek_ricci(2, 1),
        ] {
            let kappa = geom.kappa();
            let mut prev = geom.ell(1.0);
            let mut r = 1.5;
            while r <= 40.0 {
                let cur = geom.ell(r);
                assert!(cur <= prev + 1e-12);
                assert!(cur >= kappa - 1e-12);
                prev = cur;
                r += 0.5;
            }
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        // Gamma checks
        assert!((gamma_half_integer(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2) - 1.0).abs() < 1e-15);
        assert!((gamma_half_integer(3) - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(8) - 6.0).abs() < 1e-12);
    }
}
