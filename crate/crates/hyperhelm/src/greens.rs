//! Radial Green kernels of the shifted Helmholtz operator on H^N.
//!
//! With z = i*lambda - mu, the kernel is
//!
//! ```text
//! odd N:   G(t) = c_N / z * D^((N-1)/2) [ e^(z t) ]
//! even N:  G(t) = c_N / z * int_t^inf sinh(s) (cosh s - cosh t)^(-1/2)
//!                            * D^(N/2) [ e^(z s) ] ds
//! ```
//!
//! where D = (1/sinh) d/dt.  D maps the term algebra
//! coef * e^(zt) cosh^a(t) sinh^(-b)(t) to itself:
//!
//! ```text
//! D[c e^(zt) cosh^a sinh^-b] = c z e^(zt) cosh^a     sinh^-(b+1)
//!                            + c a e^(zt) cosh^(a-1) sinh^-b
//!                            - c b e^(zt) cosh^(a+1) sinh^-(b+2)
//! ```
//!
//! The normalization constant c_N is fixed so that the small-t singularity
//! matches the Euclidean fundamental solution of -Delta - lambda^2 (for
//! N = 3 this gives t G(t) -> 1/(4 pi)); since the leading singular term of
//! the algebra is unique and proportional to z, that constant is exact and
//! lambda-independent.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::gamma_half_integer;
use crate::quad::gl16_panels_complex;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub coef: Complex64,
    pub cosh_pow: u32,
    pub sinh_inv_pow: u32,
}

#[derive(Debug, Clone)]
enum KernelForm {
    /// Term list representing D^((N-1)/2)[e^(zt)].
    Odd(Vec<KernelTerm>),
    /// Term list for the inner derivative D^(N/2)[e^(zs)] under the integral.
    Even(Vec<KernelTerm>),
}

#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub n: u32,
    pub lambda: f64,
    pub mu: f64,
    /// z = i lambda - mu
    pub z: Complex64,
    /// c_N (real by the normalization choice)
    pub norm_const: f64,
    form: KernelForm,
}

/// One application of D = (1/sinh) d/dt to a term list, with merging of
/// like terms.
pub fn apply_d(terms: &[KernelTerm], z: Complex64) -> Vec<KernelTerm> {
    let mut out: Vec<KernelTerm> = Vec::with_capacity(terms.len() * 3);
    let push = |out: &mut Vec<KernelTerm>, coef: Complex64, a: u32, b: u32| {
        if coef == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(t) = out
            .iter_mut()
            .find(|t| t.cosh_pow == a && t.sinh_inv_pow == b)
        {
            t.coef += coef;
        } else {
            out.push(KernelTerm {
                coef,
                cosh_pow: a,
                sinh_inv_pow: b,
            });
        }
    };
    for t in terms {
        let (c, a, b) = (t.coef, t.cosh_pow, t.sinh_inv_pow);
        push(&mut out, c * z, a, b + 1);
        if a > 0 {
            push(&mut out, c * a as f64, a - 1, b);
        }
        if b > 0 {
            push(&mut out, c * (-(b as f64)), a + 1, b + 2);
        }
    }
    out
}

fn d_power(m: u32, z: Complex64) -> Vec<KernelTerm> {
    let mut terms = vec![KernelTerm {
        coef: Complex64::new(1.0, 0.0),
        cosh_pow: 0,
        sinh_inv_pow: 0,
    }];
    for _ in 0..m {
        terms = apply_d(&terms, z);
    }
    terms
}

/// Evaluate a term list at t > 0 without the normalization prefactor.
pub fn eval_terms(terms: &[KernelTerm], z: Complex64, t: f64) -> Complex64 {
    let ch = t.cosh();
    let sh = t.sinh();
    let mut acc = Complex64::new(0.0, 0.0);
    for term in terms {
        acc += term.coef * ch.powi(term.cosh_pow as i32) / sh.powi(term.sinh_inv_pow as i32);
    }
    acc * (z * t).exp()
}

/// Coefficient of the leading small-t singularity sinh^-(2m-1): the unique
/// term produced by one z-branch followed by m-1 sinh-branches.
fn leading_coefficient(terms: &[KernelTerm], m: u32) -> Complex64 {
    let b_max = 2 * m - 1;
    terms
        .iter()
        .filter(|t| t.sinh_inv_pow == b_max)
        .map(|t| t.coef)
        .sum()
}

/// Small-t constant of the Euclidean fundamental solution of
/// -Delta - lambda^2 in R^N: the t^(2-N) coefficient for N >= 3, the
/// |log t| coefficient for N = 2.
pub fn euclid_singularity_const(n: u32) -> f64 {
    if n == 2 {
        1.0 / (2.0 * PI)
    } else {
        gamma_half_integer(n - 2) / (4.0 * PI.powf(0.5 * n as f64))
    }
}

/// int_0^inf sech^(N-2) for even N: 1 for the log case N = 2,
/// (N-4)!!/(N-3)!! otherwise.
fn sech_profile_integral(n: u32) -> f64 {
    if n == 2 {
        1.0
    } else {
        let num: f64 = (1..=(n - 4) / 2).map(|j| 2.0 * j as f64).product();
        let den: f64 = (1..=(n - 2) / 2).map(|j| 2.0 * j as f64 - 1.0).product();
        num / den
    }
}

pub fn build_kernel_odd(n: u32, lambda: f64, mu: f64) -> Result<GreenKernel> {
    if n % 2 == 0 {
        return Err(Error::EvenDimension(n));
    }
    if n < 3 || !(lambda > 0.0) || mu < 0.0 {
        return Err(Error::InvalidHypothesis(format!(
            "odd kernel needs N >= 3 odd, lambda > 0, mu >= 0 (got N={n}, lambda={lambda}, mu={mu})"
        )));
    }
    let z = Complex64::new(-mu, lambda);
    let m = (n - 1) / 2;
    let terms = d_power(m, z);
    let lead = leading_coefficient(&terms, m);
    let c_n = z * euclid_singularity_const(n) / lead;
    debug_assert!(c_n.im.abs() < 1e-12 * c_n.re.abs().max(1e-300));
    Ok(GreenKernel {
        n,
        lambda,
        mu,
        z,
        norm_const: c_n.re,
        form: KernelForm::Odd(terms),
    })
}

pub fn build_kernel_even(n: u32, lambda: f64, mu: f64) -> Result<GreenKernel> {
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n < 2 || !(lambda > 0.0) || mu < 0.0 {
        return Err(Error::InvalidHypothesis(format!(
            "even kernel needs N >= 2 even, lambda > 0, mu >= 0 (got N={n}, lambda={lambda}, mu={mu})"
        )));
    }
    let z = Complex64::new(-mu, lambda);
    let m = n / 2;
    let terms = d_power(m, z);
    let lead_ratio = (leading_coefficient(&terms, m) / z).re;
    let c_n = euclid_singularity_const(n)
        / (lead_ratio * std::f64::consts::SQRT_2 * sech_profile_integral(n));
    Ok(GreenKernel {
        n,
        lambda,
        mu,
        z,
        norm_const: c_n,
        form: KernelForm::Even(terms),
    })
}

impl GreenKernel {
    pub fn terms(&self) -> &[KernelTerm] {
        match &self.form {
            KernelForm::Odd(t) | KernelForm::Even(t) => t,
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(self.form, KernelForm::Odd(_))
    }

    /// Closed-form evaluation (odd N only; mu = 0 is admitted).
    pub fn eval_closed(&self, t: f64) -> Result<Complex64> {
        match &self.form {
            KernelForm::Odd(terms) => Ok(self.norm_const / self.z * eval_terms(terms, self.z, t)),
            KernelForm::Even(_) => Err(Error::OddDimension(self.n)),
        }
    }

    /// Quadrature evaluation (even N; requires mu > 0).
    ///
    /// Substituting s = t + w^2 removes the inverse-square-root endpoint
    /// singularity exactly; panels follow the oscillation in s and are
    /// halved until two sweeps agree to tol.
    pub fn eval_quadrature(&self, t: f64, tol: f64) -> Result<Complex64> {
        let terms = match &self.form {
            KernelForm::Even(t) => t,
            KernelForm::Odd(_) => return Err(Error::EvenDimension(self.n)),
        };
        if !(self.mu > 0.0) {
            return Err(Error::RequiresAbsorption { mu: self.mu });
        }
        if !(t > 0.0) {
            return Err(Error::NonFiniteInput(t));
        }
        let m = (self.n / 2) as f64;
        // every term of the integrand decays like e^(-(mu + m - 1/2)(s-t))
        let decay = self.mu + m - 0.5;
        let span = ((1.0 / (tol * 1e-2)).ln() / decay).max(1.0);

        let z = self.z;
        let integrand = |w: f64| -> Complex64 {
            let s = t + w * w;
            // cosh s - cosh t = 2 sinh((s+t)/2) sinh((s-t)/2)
            let root = (2.0 * (t + 0.5 * w * w).sinh() * (0.5 * w * w).sinh()).sqrt();
            if root == 0.0 {
                let lim = 2.0 / t.sinh().sqrt();
                return lim * eval_terms(terms, z, t) * t.sinh();
            }
            eval_terms(terms, z, s) * s.sinh() * 2.0 * w / root
        };

        let ds = (0.5f64).min(PI / (2.0 * self.lambda.max(0.5)));
        let mut n_panels = ((span / ds).ceil() as usize).max(4);
        // for small t the integrand turns over like 1/w at w ~ sqrt(t);
        // graded sub-panels resolve that region before the oscillatory part
        let w_turn = t.sqrt().max(1e-8);
        let bounds = |k: usize| -> Vec<f64> {
            let first = (span / k as f64).sqrt();
            let mut b = vec![0.0];
            if w_turn < 0.25 * first {
                let mut w = 0.5 * w_turn;
                while w < first {
                    b.push(w);
                    w *= 2.0;
                }
            }
            b.extend((1..=k).map(|i| (span * i as f64 / k as f64).sqrt()));
            b
        };
        let mut prev = gl16_panels_complex(integrand, &bounds(n_panels));
        for _ in 0..8 {
            n_panels *= 2;
            let cur = gl16_panels_complex(integrand, &bounds(n_panels));
            if (cur - prev).norm() <= tol * cur.norm().max(1e-300) {
                return Ok(self.norm_const / self.z * cur);
            }
            prev = cur;
        }
        Err(Error::QuadratureFailure(format!(
            "even kernel quadrature at t = {t} did not reach tol {tol}"
        )))
    }

    pub fn eval(&self, t: f64, tol: f64) -> Result<Complex64> {
        match self.form {
            KernelForm::Odd(_) => self.eval_closed(t),
            KernelForm::Even(_) => self.eval_quadrature(t, tol),
        }
    }
}

/// Free-function form of the even-dimension evaluation.
pub fn eval_kernel_even(n: u32, lambda: f64, mu: f64, t: f64, tol: f64) -> Result<Complex64> {
    if !(mu > 0.0) {
        return Err(Error::RequiresAbsorption { mu });
    }
    build_kernel_even(n, lambda, mu)?.eval_quadrature(t, tol)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GreenLimit {
    pub value: f64,
    pub error_estimate: f64,
}

/// G(t) = lim_{mu -> 0+} Re G_{lambda+i mu}(t).
///
/// Odd N evaluates the closed form at mu = 0.  Even N evaluates at five
/// absorption values mu_0 / 2^j and extrapolates polynomially to mu = 0;
/// mu_0 shrinks with t so the extrapolation error (which scales like
/// powers of mu*t) stays below tol.
pub fn green_limit(n: u32, lambda: f64, t: f64, tol: f64) -> Result<GreenLimit> {
    if n % 2 == 1 {
        let kern = build_kernel_odd(n, lambda, 0.0)?;
        return Ok(GreenLimit {
            value: kern.eval_closed(t)?.re,
            error_estimate: 0.0,
        });
    }
    let mu0 = (0.1f64).min(0.4 / (t + 2.0));
    let mus: Vec<f64> = (0..5).map(|j| mu0 / 2f64.powi(j)).collect();
    let kernels: Result<Vec<GreenKernel>> = mus
        .iter()
        .map(|&mu| build_kernel_even(n, lambda, mu))
        .collect();
    let mut vals = Vec::with_capacity(5);
    for kern in kernels? {
        vals.push(kern.eval_quadrature(t, tol * 0.05)?.re);
    }
    // Neville extrapolation to mu = 0
    let mut table = vals;
    let mut last_diag = table[0];
    let mut prev_diag = f64::NAN;
    for k in 1..mus.len() {
        for i in (k..mus.len()).rev() {
            table[i] = (mus[i] * table[i - 1] - mus[i - k] * table[i]) / (mus[i] - mus[i - k]);
        }
        prev_diag = last_diag;
        last_diag = table[mus.len() - 1];
    }
    let error_estimate = (last_diag - prev_diag).abs();
    if error_estimate > 10.0 * tol {
        return Err(Error::ExtrapolationUnstable {
            estimate: error_estimate,
            tol,
        });
    }
    Ok(GreenLimit {
        value: last_diag,
        error_estimate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub n: u32,
    pub lambda: f64,
    pub mu: f64,
    /// sup over (0, 1] of |G| / max(t^(2-N), |log t|)
    pub small_t_sup: f64,
    /// sup over [1, 15] of |G| e^(((N-1)/2 + mu) t)
    pub large_t_sup: f64,
    pub small_trend_ok: bool,
    pub large_trend_ok: bool,
    pub pass: bool,
}

/// Certify the kernel bounds: finite sups on both grids and no growth trend
/// at either extreme (ratio at the end at most 3x the grid median).
pub fn certify_asymptotics(
    kern: &GreenKernel,
    t_small: &[f64],
    t_large: &[f64],
    quad_tol: f64,
) -> Result<AsymptoticsReport> {
    let n = kern.n;
    let small_weight = |t: f64| (t.powi(2 - n as i32)).max(t.ln().abs());
    let mut small: Vec<f64> = Vec::with_capacity(t_small.len());
    for &t in t_small {
        small.push(kern.eval(t, quad_tol)?.norm() / small_weight(t));
    }
    let rate = 0.5 * (n as f64 - 1.0) + kern.mu;
    let mut large: Vec<f64> = Vec::with_capacity(t_large.len());
    for &t in t_large {
        large.push(kern.eval(t, quad_tol)?.norm() * (rate * t).exp());
    }
    let sup = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    // grids are sorted increasing; the singular end of the small grid is the
    // first entry, the far end of the large grid the last
    let small_trend_ok = small.first().copied().unwrap_or(0.0) <= 3.0 * median(&small);
    let large_trend_ok = large.last().copied().unwrap_or(0.0) <= 3.0 * median(&large);
    let small_t_sup = sup(&small);
    let large_t_sup = sup(&large);
    let pass =
        small_t_sup.is_finite() && large_t_sup.is_finite() && small_trend_ok && large_trend_ok;
    Ok(AsymptoticsReport {
        n,
        lambda: kern.lambda,
        mu: kern.mu,
        small_t_sup,
        large_t_sup,
        small_trend_ok,
        large_trend_ok,
        pass,
    })
}

/// Log-spaced grid, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
