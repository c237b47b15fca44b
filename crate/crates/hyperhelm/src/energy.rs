//! Energy functionals of the radial problem and their bounds.
//!
//! For a solution u of the radial equation:
//!
//! ```text
//! Z   = u'^2/2 + V u^2/2 + Gamma |u|^p / p          (decaying energy)
//! v   = f^(1/2) u,  v' = f^(1/2) (u' + ell u / 2)
//! psi = v'^2/2 + f (Vtilde u^2/2 + Gamma |u|^p / p),  Vtilde = V - kappa^2/4
//! c   = Gamma |u|^(p-2) + V - ell'/2 - ell^2/4       (oscillation coefficient)
//! ```
//!
//! Z satisfies Z' = -ell u'^2 + V' u^2/2 + Gamma' |u|^p / p <= m Z with the
//! concrete integrable majorant m = max(|V'|/V, |Gamma'|/Gamma), hence the
//! Gronwall bound Z(r) <= Z(0) exp(int m).  The quantity
//! (u^2 + u'^2)(1 + f)/K with K = V(0) gamma0^2 + Gamma(0)|gamma0|^p is
//! pinched between two positive constants independent of gamma0 once c(r) is
//! uniformly positive.

use crate::error::{Error, Result};
use crate::geometry::RadialGeometry;
use crate::profile::CoefficientProfile;
use crate::quad::{cumulative_trapezoid, linear_fit};
use crate::report::CheckResult;
use crate::solver::{ProblemStamp, RadialSolution};

/// Offset used to evaluate psi and c at the first grid node: both involve
/// ell and ell', which are singular at the origin itself.
const ORIGIN_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub f: Vec<f64>,
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
    pub c: Vec<f64>,
    /// Nonlinear part of c: Gamma |u|^(p-2).
    pub c_nonlinear: Vec<f64>,
    /// Concrete majorant m(r) = max(|V'|/V, |Gamma'|/Gamma).
    pub m: Vec<f64>,
    /// (u^2 + u'^2)(1 + f)/K_gamma.
    pub ratio: Vec<f64>,
    /// V(0) gamma0^2 + Gamma(0) |gamma0|^p.
    pub k_gamma: f64,
    pub z0: f64,
    pub gamma0: f64,
    pub v_inf: f64,
    pub kappa: f64,
    pub zeros: Vec<f64>,
    pub r_max: f64,
    pub stamp: ProblemStamp,
    geom: RadialGeometry,
}

pub fn energy_trace(
    sol: &RadialSolution,
    geom: &RadialGeometry,
    coeffs: &CoefficientProfile,
) -> Result<EnergyTrace> {
    let stamp = ProblemStamp::of(geom, coeffs);
    if !sol.stamp.matches(&stamp) {
        return Err(Error::MismatchedProblem(format!(
            "solution stamp {:?} vs problem {:?}",
            sol.stamp, stamp
        )));
    }

    let p = coeffs.p;
    let kappa = geom.kappa();
    let k_gamma =
        coeffs.v_at(0.0) * sol.gamma0 * sol.gamma0 + coeffs.gamma_at(0.0) * sol.gamma0.abs().powf(p);
    let z0 = 0.5 * coeffs.v_at(0.0) * sol.gamma0 * sol.gamma0
        + coeffs.gamma_at(0.0) * sol.gamma0.abs().powf(p) / p;

    let n = sol.grid.len();
    let mut f = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut c_nonlinear = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut ratio = Vec::with_capacity(n);

    for (i, &r) in sol.grid.iter().enumerate() {
        let u = sol.u[i];
        let du = sol.du[i];
        let fr = geom.density(r);
        let v = coeffs.v_at(r);
        let g = coeffs.gamma_at(r);
        let up = u.abs().powf(p);

        z.push(0.5 * du * du + 0.5 * v * u * u + g * up / p);

        let r_safe = r.max(ORIGIN_OFFSET);
        let ell = geom.ell(r_safe);
        let ellp = geom.ell_prime(r_safe);
        let f_safe = geom.density(r_safe);
        let vprime = f_safe.sqrt() * (du + 0.5 * ell * u);
        let vtilde = v - 0.25 * kappa * kappa;
        psi.push(0.5 * vprime * vprime + f_safe * (0.5 * vtilde * u * u + g * up / p));
        let nl = g * u.abs().powf(p - 2.0);
        c.push(nl + v - 0.5 * ellp - 0.25 * ell * ell);
        c_nonlinear.push(nl);

        let mut maj = if v > 0.0 { coeffs.dv_at(r).abs() / v } else { 0.0 };
        if !coeffs.gamma.is_zero() && g > 0.0 {
            maj = maj.max(coeffs.dgamma_at(r).abs() / g);
        }
        m.push(maj);

        ratio.push(if k_gamma > 0.0 {
            (u * u + du * du) * (1.0 + fr) / k_gamma
        } else {
            0.0
        });
        f.push(fr);
    }

    Ok(EnergyTrace {
        grid: sol.grid.clone(),
        u: sol.u.clone(),
        du: sol.du.clone(),
        f,
        z,
        psi,
        c,
        c_nonlinear,
        m,
        ratio,
        k_gamma,
        z0,
        gamma0: sol.gamma0,
        v_inf: coeffs.v_inf(),
        kappa,
        zeros: sol.zeros.clone(),
        r_max: sol.r_max,
        stamp,
        geom: geom.clone(),
    })
}

/// Pointwise Z' <= m Z and the integrated Gronwall bound
/// Z(r) <= Z(0) exp(int_0^r m).  Violations are reported, never thrown.
pub fn check_growth_bound(
    trace: &EnergyTrace,
    coeffs: &CoefficientProfile,
    tol_pointwise: f64,
    tol_integrated: f64,
) -> Vec<CheckResult> {
    let p = coeffs.p;
    let mut worst_point = f64::NEG_INFINITY;
    let mut worst_point_r = 0.0;
    for (i, &r) in trace.grid.iter().enumerate() {
        let u = trace.u[i];
        let du = trace.du[i];
        let zp = analytic_z_prime(trace, coeffs, r, u, du, p);
        let gap = zp - trace.m[i] * trace.z[i];
        if gap > worst_point {
            worst_point = gap;
            worst_point_r = r;
        }
    }

    let m_cum = cumulative_trapezoid(&trace.grid, &trace.m);
    let mut worst_int = f64::NEG_INFINITY;
    let mut worst_int_r = 0.0;
    for (i, &r) in trace.grid.iter().enumerate() {
        if trace.z0 == 0.0 {
            break;
        }
        let bound = trace.z0 * m_cum[i].exp();
        let excess = trace.z[i] / bound - 1.0;
        if excess > worst_int {
            worst_int = excess;
            worst_int_r = r;
        }
    }
    if !worst_int.is_finite() {
        worst_int = 0.0;
    }

    vec![
        CheckResult::new(
            "growth_pointwise_zprime_le_mz",
            worst_point <= tol_pointwise,
            worst_point,
            tol_pointwise,
            worst_point_r,
        ),
        CheckResult::new(
            "growth_integrated_gronwall",
            worst_int <= tol_integrated,
            worst_int,
            tol_integrated,
            worst_int_r,
        ),
    ]
}

fn analytic_z_prime(
    trace: &EnergyTrace,
    coeffs: &CoefficientProfile,
    r: f64,
    u: f64,
    du: f64,
    p: f64,
) -> f64 {
    // ell ~ d0/r and u'(r) ~ r near 0, so the ell u'^2 term vanishes there
    let ell_term = if r > 0.0 {
        trace.geom.ell(r) * du * du
    } else {
        0.0
    };
    -ell_term + 0.5 * coeffs.dv_at(r) * u * u + coeffs.dgamma_at(r) * u.abs().powf(p) / p
}

#[derive(Debug, Clone, Copy)]
pub struct TwoSidedBounds {
    pub c_lower: f64,
    pub c_upper: f64,
    /// First radius past which c(r) >= (V_inf - kappa^2/4)/2.
    pub onset: f64,
}

/// Infimum and supremum of (u^2 + u'^2)(1 + f)/K_gamma over the grid tail
/// past the asymptotic onset.
pub fn check_two_sided_bounds(trace: &EnergyTrace) -> Result<TwoSidedBounds> {
    if trace.k_gamma <= 0.0 {
        return Err(Error::NotAsymptotic(
            "K_gamma = 0 (zero initial amplitude)".into(),
        ));
    }
    let half_margin = 0.5 * (trace.v_inf - 0.25 * trace.kappa * trace.kappa);
    if half_margin <= 0.0 {
        return Err(Error::NotAsymptotic("no positive spectral margin".into()));
    }
    // smallest grid point after which the problem is in its asymptotic
    // regime: c stays above half the margin and the nonlinear part of c
    // has died off (for large amplitudes the nonlinearity alone keeps c
    // positive through the transition zone, which is not asymptotic)
    let mut onset_idx = None;
    for i in (0..trace.grid.len()).rev() {
        if trace.c[i] < half_margin || trace.c_nonlinear[i] > 0.5 * half_margin {
            onset_idx = Some(i + 1);
            break;
        }
    }
    let onset_idx = onset_idx.unwrap_or(1).min(trace.grid.len() - 1);
    let onset = trace.grid[onset_idx];

    let zeros_past = trace.zeros.iter().filter(|&&z| z > onset).count();
    if zeros_past < 5 {
        return Err(Error::NotAsymptotic(format!(
            "only {zeros_past} zeros past the onset radius {onset:.3}"
        )));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in onset_idx..trace.grid.len() {
        lo = lo.min(trace.ratio[i]);
        hi = hi.max(trace.ratio[i]);
    }
    Ok(TwoSidedBounds {
        c_lower: lo,
        c_upper: hi,
        onset,
    })
}

/// Local maxima of |u| between consecutive zeros: (radius, peak value).
pub fn peak_points(sol: &RadialSolution) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for w in sol.zeros.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut best_r = a;
        let mut best = 0.0f64;
        const SAMPLES: usize = 128;
        for j in 1..SAMPLES {
            let r = a + (b - a) * j as f64 / SAMPLES as f64;
            let v = sol.eval(r).0.abs();
            if v > best {
                best = v;
                best_r = r;
            }
        }
        // parabolic refinement around the best sample
        let h = (b - a) / SAMPLES as f64;
        let f0 = sol.eval(best_r - h).0.abs();
        let f1 = best;
        let f2 = sol.eval(best_r + h).0.abs();
        let denom = f0 - 2.0 * f1 + f2;
        if denom.abs() > 1e-300 {
            let shift = 0.5 * (f0 - f2) / denom;
            if shift.abs() < 1.0 {
                let r = best_r + shift * h;
                let v = sol.eval(r).0.abs();
                if v >= best {
                    best_r = r;
                    best = v;
                }
            }
        }
        peaks.push((best_r, best));
    }
    peaks
}

/// Least-squares slope of -log(peak |u|) against r over the tail half of
/// the grid: the pointwise decay exponent.
pub fn fit_decay_exponent(sol: &RadialSolution) -> Result<f64> {
    let peaks = tail_peaks(sol)?;
    let xs: Vec<f64> = peaks.iter().map(|&(r, _)| r).collect();
    let ys: Vec<f64> = peaks.iter().map(|&(_, v)| -v.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

/// Same fit against log r: reports the algebraic decay power (Euclidean
/// envelopes fall like a power of r rather than an exponential).
pub fn fit_decay_power(sol: &RadialSolution) -> Result<f64> {
    let peaks = tail_peaks(sol)?;
    let xs: Vec<f64> = peaks.iter().map(|&(r, _)| r.ln()).collect();
    let ys: Vec<f64> = peaks.iter().map(|&(_, v)| -v.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

/// Amplitude of the oscillation envelope in the f^(-1/2) decay class: the
/// mean over tail oscillations of the maxima of |u| sqrt(f).  (Maxima of the
/// weighted function, not of |u|: the two sit at different radii.)
pub fn envelope_amplitude(sol: &RadialSolution, geom: &RadialGeometry) -> Result<f64> {
    if sol.zeros.len() < 10 {
        return Err(Error::TooFewZeros {
            found: sol.zeros.len(),
            needed: 10,
        });
    }
    let cut = 0.5 * sol.r_max;
    let mut vals = Vec::new();
    for w in sol.zeros.windows(2) {
        if w[0] < cut {
            continue;
        }
        let mut best = 0.0f64;
        const SAMPLES: usize = 128;
        for j in 1..SAMPLES {
            let r = w[0] + (w[1] - w[0]) * j as f64 / SAMPLES as f64;
            best = best.max(sol.eval(r).0.abs() * geom.density(r).sqrt());
        }
        vals.push(best);
    }
    if vals.len() < 3 {
        return Err(Error::NotAsymptotic(
            "too few oscillations past the midpoint".into(),
        ));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

fn tail_peaks(sol: &RadialSolution) -> Result<Vec<(f64, f64)>> {
    if sol.zeros.len() < 10 {
        return Err(Error::TooFewZeros {
            found: sol.zeros.len(),
            needed: 10,
        });
    }
    let all = peak_points(sol);
    let cut = 0.5 * sol.r_max;
    let tail: Vec<(f64, f64)> = all.iter().copied().filter(|&(r, _)| r >= cut).collect();
    if tail.len() >= 3 {
        Ok(tail)
    } else {
        Ok(all[all.len().saturating_sub(6)..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;
    use crate::solver::solve_radial_ivp;

    fn h3_v5() -> (RadialGeometry, CoefficientProfile, RadialSolution) {
        let geom = RadialGeometry::hyperbolic(3);
        let coeffs = CoefficientProfile::helmholtz(&geom, 2.0, RadialProfile::Zero, 3.0).unwrap();
        let sol = solve_radial_ivp(&geom, &coeffs, 1.0, 40.0, 1e-10).unwrap();
        (geom, coeffs, sol)
    }

    #[test]
    fn z0_identity_is_exact() {
        let geom = RadialGeometry::hyperbolic(3);
        let v = RadialProfile::Constant(5.0);
        let g = RadialProfile::Constant(1.0);
        let coeffs = CoefficientProfile::new(v, g, 3.0).unwrap();
        let sol = solve_radial_ivp(&geom, &coeffs, 2.0, 12.0, 1e-9).unwrap();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        // Z(0) = 5*4/2 + 8/3
        assert_eq!(trace.z0, 10.0 + 8.0 / 3.0);
        assert!((trace.z[0] - trace.z0).abs() < 1e-15);
        assert!((trace.z0 - 12.666667).abs() < 1e-6);
    }

    #[test]
    fn oscillation_coefficient_hyperbolic3() {
        // for H^3 the substitution v = sinh(r) u removes ell exactly:
        // c(r) = V - 1 = lambda^2 at every radius
        let (geom, coeffs, sol) = h3_v5();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        for (i, &r) in trace.grid.iter().enumerate() {
            if r < 0.5 {
                continue;
            }
            assert!(
                (trace.c[i] - 4.0).abs() < 1e-10,
                "c({r}) = {} should be 4",
                trace.c[i]
            );
        }
    }

    #[test]
    fn gamma0_zero_gives_zero_trace() {
        let geom = RadialGeometry::hyperbolic(3);
        let coeffs = CoefficientProfile::helmholtz(&geom, 1.0, RadialProfile::Constant(1.0), 3.0)
            .unwrap();
        let sol = solve_radial_ivp(&geom, &coeffs, 0.0, 12.0, 1e-9).unwrap();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        assert!(trace.z.iter().all(|&z| z == 0.0));
        assert!(trace.psi.iter().all(|&v| v == 0.0));
        assert!(matches!(
            check_two_sided_bounds(&trace),
            Err(Error::NotAsymptotic(_))
        ));
    }

    #[test]
    fn mismatched_problem_detected() {
        let (geom, _, sol) = h3_v5();
        let other = CoefficientProfile::helmholtz(&geom, 1.0, RadialProfile::Zero, 3.0).unwrap();
        assert!(matches!(
            energy_trace(&sol, &geom, &other),
            Err(Error::MismatchedProblem(_))
        ));
    }

    #[test]
    fn psi_two_evaluation_orders_agree() {
        let (geom, coeffs, sol) = h3_v5();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        let p = coeffs.p;
        for (i, &r) in trace.grid.iter().enumerate() {
            if r < 1e-3 {
                continue;
            }
            let u = trace.u[i];
            let du = trace.du[i];
            let fr = geom.density(r);
            // expanded v' = sqrt(f) u' + (ell/2) sqrt(f) u
            let vp = fr.sqrt() * du + 0.5 * geom.ell(r) * fr.sqrt() * u;
            let vtilde = coeffs.v_at(r) - 0.25 * geom.kappa() * geom.kappa();
            let psi2 = 0.5 * vp * vp
                + fr * (0.5 * vtilde * u * u + coeffs.gamma_at(r) * u.abs().powf(p) / p);
            let denom = trace.psi[i].abs().max(1e-30);
            assert!(
                ((trace.psi[i] - psi2) / denom).abs() < 1e-12,
                "psi orders disagree at r={r}"
            );
        }
    }

    #[test]
    fn constant_coefficients_z_nonincreasing() {
        let (_, coeffs, sol) = h3_v5();
        let geom = RadialGeometry::hyperbolic(3);
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        let checks = check_growth_bound(&trace, &coeffs, 1e-8, 0.01);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        assert!(trace.m.iter().all(|&m| m == 0.0));
        let mut prev = trace.z[0];
        for &z in &trace.z[1..] {
            assert!(z <= prev * (1.0 + 1e-10));
            prev = z;
        }
    }

    #[test]
    fn two_sided_ratio_bounded() {
        let (geom, coeffs, sol) = h3_v5();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        let b = check_two_sided_bounds(&trace).unwrap();
        assert!(b.c_lower > 0.0 && b.c_upper.is_finite());
        assert!(b.c_upper / b.c_lower < 50.0, "{b:?}");
    }

    #[test]
    fn decay_exponent_h3() {
        let (geom, _, sol) = h3_v5();
        let sigma = fit_decay_exponent(&sol).unwrap();
        assert!((sigma - 1.0).abs() < 0.01, "sigma = {sigma}");
        let env = envelope_amplitude(&sol, &geom).unwrap();
        // u = sin(2r)/(2 sinh r): envelope of u sinh(r) is 1/2
        assert!((env - 0.5).abs() < 0.01, "envelope {env}");
    }

    #[test]
    fn euclidean_power_decay() {
        let geom = RadialGeometry::euclidean(3);
        let coeffs = CoefficientProfile::linear(RadialProfile::Constant(1.0));
        let sol = solve_radial_ivp(&geom, &coeffs, 1.0, 60.0, 1e-9).unwrap();
        let sigma = fit_decay_exponent(&sol).unwrap();
        assert!(sigma.abs() < 0.05, "exponential rate should vanish: {sigma}");
        let power = fit_decay_power(&sol).unwrap();
        assert!((power - 1.0).abs() < 0.05, "1/r envelope: {power}");
    }
}
