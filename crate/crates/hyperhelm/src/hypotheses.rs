//! Numerical evidence for the standing hypotheses on (f, V, Gamma):
//!
//! ```text
//! (H1) ell = (log f)' -> kappa, (log f)'' -> 0, ell^2 - kappa^2 integrable
//! (H2) V > 0, V -> V_inf > kappa^2/4, V' integrable
//! (H3) Gamma >= 0, |Gamma'|/Gamma integrable, or Gamma identically zero
//! ```
//!
//! These are asymptotic statements; the checker probes a finite window and
//! the report records the evidence (tail integrals, gaps, margins) next to
//! the verdicts rather than claiming a proof.

use serde::Serialize;

use crate::geometry::RadialGeometry;
use crate::profile::CoefficientProfile;
use crate::quad::gl16_panels;

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub h3_ok: bool,
    pub kappa: f64,
    /// V_inf - kappa^2/4
    pub margin: f64,
    /// integral of |ell^2 - kappa^2| over [r_max/2, r_max]
    pub tail_ell_sq: f64,
    /// the same integral over the preceding dyadic window [r_max/4, r_max/2]
    pub tail_ell_sq_prev: f64,
    /// integral of |V'| over [r_max/2, r_max]
    pub tail_v_prime: f64,
    /// integral of |Gamma'|/Gamma over [r_max/2, r_max]; None when Gamma == 0
    pub tail_gamma_ratio: Option<f64>,
    pub ell_gap_at_r_max: f64,
    pub ell_prime_at_r_max: f64,
    pub density_nondecreasing: bool,
    pub v_positive: bool,
    pub gamma_nonnegative: bool,
    pub r_max: f64,
    pub tol: f64,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.h1_ok && self.h2_ok && self.h3_ok
    }

    pub fn failure_message(&self) -> Option<String> {
        if self.all_ok() {
            return None;
        }
        let mut parts = Vec::new();
        if !self.h1_ok {
            parts.push(format!(
                "H1 fails: ell gap {:.3e}, ell' {:.3e} at r_max, density nondecreasing: {}",
                self.ell_gap_at_r_max, self.ell_prime_at_r_max, self.density_nondecreasing
            ));
        }
        if !self.h2_ok {
            parts.push(format!(
                "H2 fails: margin V_inf - kappa^2/4 = {:.6} (kappa = {}), V positive: {}",
                self.margin, self.kappa, self.v_positive
            ));
        }
        if !self.h3_ok {
            parts.push("H3 fails: Gamma must be nonnegative with integrable |Gamma'|/Gamma".into());
        }
        Some(parts.join("; "))
    }
}

pub fn check_hypotheses(
    geom: &RadialGeometry,
    coeffs: &CoefficientProfile,
    r_max: f64,
    tol: f64,
) -> HypothesisReport {
    assert!(r_max >= 10.0, "hypothesis probe needs r_max >= 10");
    let kappa = geom.kappa();
    let margin = coeffs.v_inf() - 0.25 * kappa * kappa;

    let window = |lo: f64, hi: f64| -> Vec<f64> {
        (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect()
    };
    let ell_sq_dev = |r: f64| {
        let e = geom.ell(r);
        (e * e - kappa * kappa).abs()
    };
    let panels = window(0.5 * r_max, r_max);
    let tail_ell_sq = gl16_panels(ell_sq_dev, &panels);
    let tail_ell_sq_prev = gl16_panels(ell_sq_dev, &window(0.25 * r_max, 0.5 * r_max));
    let tail_v_prime = gl16_panels(|r| coeffs.dv_at(r).abs(), &panels);
    let gamma_zero = coeffs.gamma.is_zero();
    let tail_gamma_ratio = if gamma_zero {
        None
    } else {
        Some(gl16_panels(
            |r| {
                let g = coeffs.gamma_at(r);
                if g <= 0.0 {
                    0.0
                } else {
                    coeffs.dgamma_at(r).abs() / g
                }
            },
            &panels,
        ))
    };

    let ell_gap_at_r_max = (geom.ell(r_max) - kappa).abs();
    let ell_prime_at_r_max = geom.ell_prime(r_max).abs();

    // probe grid over the whole window
    let mut density_nondecreasing = true;
    let mut v_positive = true;
    let mut gamma_nonnegative = true;
    let n = 512;
    let mut prev_f = geom.density(0.0);
    for i in 1..=n {
        let r = r_max * i as f64 / n as f64;
        let f = geom.density(r);
        if f < prev_f * (1.0 - 1e-12) {
            density_nondecreasing = false;
        }
        prev_f = f;
        if !(coeffs.v_at(r) > 0.0) {
            v_positive = false;
        }
        if coeffs.gamma_at(r) < 0.0 {
            gamma_nonnegative = false;
        }
    }

    // asymptotic conditions over a finite window: accept either values
    // already below tol, or a clear decay trend across dyadic radii (the
    // Euclidean ell = (N-1)/r converges only algebraically, yet
    // ell^2 - kappa^2 stays integrable)
    let trend_ok = |half: f64, full: f64| full <= tol || full <= 0.7 * half;
    let h1_ok = density_nondecreasing
        && trend_ok((geom.ell(0.5 * r_max) - kappa).abs(), ell_gap_at_r_max)
        && trend_ok(geom.ell_prime(0.5 * r_max).abs(), ell_prime_at_r_max)
        && trend_ok(tail_ell_sq_prev, tail_ell_sq);
    let h2_ok = margin > 0.0 && v_positive;
    let h3_ok = gamma_zero
        || (gamma_nonnegative
            && (coeffs.gamma_at(r_max) - coeffs.gamma_inf()).abs()
                <= tol * (1.0 + coeffs.gamma_inf().abs()));

    HypothesisReport {
        h1_ok,
        h2_ok,
        h3_ok,
        kappa,
        margin,
        tail_ell_sq,
        tail_ell_sq_prev,
        tail_v_prime,
        tail_gamma_ratio,
        ell_gap_at_r_max,
        ell_prime_at_r_max,
        density_nondecreasing,
        v_positive,
        gamma_nonnegative,
        r_max,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;

    #[test]
    fn hyperbolic_constant_coefficients_pass() {
        let geom = RadialGeometry::hyperbolic(3);
        let lambda: f64 = 2.0;
        let coeffs =
            CoefficientProfile::helmholtz(&geom, lambda, RadialProfile::Constant(1.0), 3.0)
                .unwrap();
        let rep = check_hypotheses(&geom, &coeffs, 60.0, 1e-8);
        assert!(rep.all_ok(), "{:?}", rep.failure_message());
        assert!((rep.margin - lambda * lambda).abs() < 1e-12);
        assert!(rep.tail_ell_sq < 1e-12);
        assert!(rep.tail_v_prime < 1e-15);
    }

    #[test]
    fn euclidean_low_potential_still_h2() {
        // kappa = 0: margin equals V_inf; ell -> 0 only algebraically but
        // with integrable square, so H1 must still pass
        let geom = RadialGeometry::euclidean(3);
        let coeffs = CoefficientProfile::linear(RadialProfile::Constant(0.5));
        let rep = check_hypotheses(&geom, &coeffs, 40.0, 1e-4);
        assert!(rep.h1_ok, "{rep:?}");
        assert!(rep.h2_ok);
        assert!((rep.margin - 0.5).abs() < 1e-12);
        assert!(rep.tail_ell_sq < rep.tail_ell_sq_prev);
    }

    #[test]
    fn oscillating_log_derivative_fails_h1() {
        // ell does not settle: neither below tol nor trending down
        let geom = RadialGeometry::Custom {
            density: std::sync::Arc::new(|r: f64| (r + 0.5 * (1.0 - r.cos())).exp()),
            log_deriv: std::sync::Arc::new(|r: f64| 1.0 + 0.5 * r.sin()),
            log_deriv_prime: std::sync::Arc::new(|r: f64| 0.5 * r.cos()),
            kappa: 1.0,
            d0: 0.0,
            label: "wobble".into(),
        };
        let coeffs = CoefficientProfile::linear(RadialProfile::Constant(2.0));
        let rep = check_hypotheses(&geom, &coeffs, 64.2, 1e-4);
        assert!(!rep.h1_ok, "{rep:?}");
    }

    #[test]
    fn hyperbolic_below_spectrum_fails_h2() {
        let geom = RadialGeometry::hyperbolic(3);
        let coeffs = CoefficientProfile::linear(RadialProfile::Constant(0.5));
        let rep = check_hypotheses(&geom, &coeffs, 40.0, 1e-8);
        assert!(!rep.h2_ok);
        assert!((rep.margin + 0.5).abs() < 1e-12);
        assert!(rep.failure_message().unwrap().contains("H2"));
    }

    #[test]
    fn gamma_zero_skips_ratio_integral() {
        let geom = RadialGeometry::hyperbolic(2);
        let coeffs = CoefficientProfile::helmholtz(&geom, 1.0, RadialProfile::Zero, 3.0).unwrap();
        let rep = check_hypotheses(&geom, &coeffs, 30.0, 1e-8);
        assert!(rep.h3_ok);
        assert!(rep.tail_gamma_ratio.is_none());
    }

    #[test]
    fn decaying_tails_have_small_integrals() {
        let geom = RadialGeometry::hyperbolic(3);
        let v = RadialProfile::ConstPlusExp {
            base: 2.0,
            amp: 1.0,
            rate: 1.0,
        };
        let g = RadialProfile::ConstPlusExp {
            base: 1.0,
            amp: 1.0,
            rate: 1.0,
        };
        let coeffs = CoefficientProfile::new(v, g, 3.0).unwrap();
        let rep = check_hypotheses(&geom, &coeffs, 40.0, 1e-6);
        assert!(rep.all_ok(), "{:?}", rep.failure_message());
        // tail of |V'| = e^{-r} over [20, 40]
        assert!((rep.tail_v_prime - ((-20.0f64).exp() - (-40.0f64).exp())).abs() < 1e-12);
        assert!(rep.tail_gamma_ratio.unwrap() < 3e-9);
    }
}
