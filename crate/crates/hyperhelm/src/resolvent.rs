//! Limiting-absorption resolvent (L - lambda^2 - i0)^(-1) on radial data.
//!
//! The kernel is assembled from a homogeneous pair: the solution u_reg
//! regular at the origin and the outgoing solution u_out ~ f^(-1/2)
//! e^(i lambda r), seeded at r_max by its WKB form and integrated backward.
//! With the Abel constant W = f (u_reg u_out' - u_reg' u_out), variation of
//! parameters gives
//!
//! ```text
//! u(r) = -[ u_out(r) int_0^r u_reg g f ds
//!         + u_reg(r) int_r^rmax u_out g f ds ] / W
//! ```
//!
//! which solves (L - lambda^2) u = g with outgoing behaviour; its real part
//! is the R_lambda component and its imaginary part the E_lambda component
//! (a homogeneous solution).  The +i lambda phase selects the -i0 boundary
//! value; flipping it would produce the +i0 resolvent.
//!
//! An independent route convolves the mu -> 0+ Green kernel against g with
//! the hyperbolic law of cosines; the two must agree.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dopri::{self, Options};
use crate::error::{Error, Result};
use crate::geometry::{sphere_area, RadialGeometry};
use crate::greens::green_limit;
use crate::profile::{CoefficientProfile, RadialProfile};
use crate::quad::{cumulative_uniform4, gl16_panels};
use crate::solver::solve_radial_ivp;

/// WKB seeding defect |(kappa^2 - ell^2)/4 - ell'/2| allowed at r_max.
const WKB_DEFECT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ComplexRadialField {
    pub grid: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub re_deriv: Vec<f64>,
    pub im_deriv: Vec<f64>,
    pub lambda: f64,
    pub geometry: String,
    pub route: String,
}

impl ComplexRadialField {
    pub fn value(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn deriv(&self, i: usize) -> Complex64 {
        Complex64::new(self.re_deriv[i], self.im_deriv[i])
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().all(|v| v.is_finite())
            && self.im.iter().all(|v| v.is_finite())
            && self.re_deriv.iter().all(|v| v.is_finite())
            && self.im_deriv.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct HomogeneousPair {
    pub grid: Vec<f64>,
    pub h: f64,
    pub u_reg: Vec<f64>,
    pub du_reg: Vec<f64>,
    /// Outgoing solution; entry 0 is unusable (origin-singular) and set to
    /// zero, every consumer treats the r = 0 node separately.
    pub u_out: Vec<Complex64>,
    pub du_out: Vec<Complex64>,
    pub f: Vec<f64>,
    /// f (u_reg u_out' - u_reg' u_out), certified constant.
    pub w_abel: Complex64,
    pub w_drift: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub r_max: f64,
    pub tol: f64,
    pub geom: RadialGeometry,
}

pub fn homogeneous_pair(
    geom: &RadialGeometry,
    lambda: f64,
    r_max: f64,
    tol: f64,
    n_cells: usize,
) -> Result<HomogeneousPair> {
    assert!(n_cells >= 16, "resolvent grid too coarse");
    if !(lambda > 0.0) {
        return Err(Error::InvalidHypothesis(format!(
            "resolvent needs lambda > 0, got {lambda}"
        )));
    }
    let kappa = geom.kappa();
    // WKB residual coefficient (kappa^2 - ell^2)/4 - ell'/2 must be
    // negligible at the truncation radius
    let wkb_defect =
        (0.25 * (kappa * kappa - geom.ell(r_max).powi(2)) - 0.5 * geom.ell_prime(r_max)).abs();
    if wkb_defect > WKB_DEFECT_LIMIT {
        return Err(Error::TruncationTooSmall {
            r_max,
            defect: wkb_defect,
        });
    }

    let h = r_max / n_cells as f64;
    let grid: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
    let f: Vec<f64> = grid.iter().map(|&r| geom.density(r)).collect();

    // regular solution via the IVP solver (gamma0 = 1)
    let coeffs = CoefficientProfile::helmholtz(geom, lambda, RadialProfile::Zero, 3.0)?;
    let reg = solve_radial_ivp(geom, &coeffs, 1.0, r_max, tol)?;
    let mut u_reg = Vec::with_capacity(grid.len());
    let mut du_reg = Vec::with_capacity(grid.len());
    for &r in &grid {
        let (u, du) = reg.eval(r);
        u_reg.push(u);
        du_reg.push(du);
    }

    // outgoing solution backward from the WKB seed
    let v = 0.25 * kappa * kappa + lambda * lambda;
    let out_init = {
        let amp = geom.density(r_max).powf(-0.5);
        let phase = Complex64::new(0.0, lambda * r_max).exp();
        let u = amp * phase;
        let du = Complex64::new(-0.5 * geom.ell(r_max), lambda) * u;
        [u.re, du.re, u.im, du.im]
    };
    let mut rhs = |r: f64, y: &[f64; 4]| {
        let ell = geom.ell(r);
        [y[1], -ell * y[1] - v * y[0], y[3], -ell * y[3] - v * y[2]]
    };
    let opts = Options {
        rtol: 0.02 * tol,
        atol: 1e-3 * tol,
        h_max: (tol.powf(0.25) / (1.0 + v.sqrt())).min(0.25),
        h_init: None,
        max_steps: 4_000_000,
    };
    let run = dopri::integrate(&mut rhs, r_max, h.min(0.5 * r_max), out_init, &opts, None)?;
    let mut u_out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut du_out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, &r) in grid.iter().enumerate().skip(1) {
        let y = run.dense.eval(r);
        u_out[i] = Complex64::new(y[0], y[2]);
        du_out[i] = Complex64::new(y[1], y[3]);
    }

    // Abel identity: f (u_reg u_out' - u_reg' u_out) constant
    let mut w_samples = Vec::with_capacity(grid.len() - 1);
    for i in 1..grid.len() {
        w_samples.push(f[i] * (u_reg[i] * du_out[i] - du_reg[i] * u_out[i]));
    }
    let w_abel = w_samples[w_samples.len() / 2];
    if w_abel.norm() < 1e-10 {
        return Err(Error::DegeneratePair {
            wronskian_abs: w_abel.norm(),
        });
    }
    let w_drift = w_samples
        .iter()
        .map(|w| (w - w_abel).norm())
        .fold(0.0f64, f64::max)
        / w_abel.norm();

    Ok(HomogeneousPair {
        grid,
        h,
        u_reg,
        du_reg,
        u_out,
        du_out,
        f,
        w_abel,
        w_drift,
        lambda,
        kappa,
        r_max,
        tol,
        geom: geom.clone(),
    })
}

impl HomogeneousPair {
    pub fn potential(&self) -> f64 {
        0.25 * self.kappa * self.kappa + self.lambda * self.lambda
    }

    /// Apply the resolvent to grid samples of g by variation of parameters.
    pub fn apply_resolvent(&self, g: &[f64]) -> Result<ComplexRadialField> {
        self.apply_resolvent_impl(g, true)
    }

    /// Support-unchecked variant for assembling the dense operator matrix
    /// column by column (unit vectors near r_max are fine there).
    pub(crate) fn apply_resolvent_impl(
        &self,
        g: &[f64],
        enforce_support: bool,
    ) -> Result<ComplexRadialField> {
        assert_eq!(g.len(), self.grid.len(), "source not aligned with grid");
        let n = g.len();
        let g_max = g.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if enforce_support && g_max > 0.0 {
            let tail_start = n - (n / 20).max(2);
            let tail = g[tail_start..].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if tail > 1e-10 * g_max {
                return Err(Error::SupportViolation {
                    tail_fraction: tail / g_max,
                });
            }
        }

        // I1(r) = int_0^r u_reg g f, J(r) = int_r^rmax u_out g f
        let integrand1: Vec<f64> = (0..n).map(|i| self.u_reg[i] * g[i] * self.f[i]).collect();
        let i1 = cumulative_uniform4(self.h, &integrand1);
        // u_out f -> 0 at the origin for every admitted model
        let int2_re: Vec<f64> = (0..n)
            .map(|i| self.u_out[i].re * g[i] * self.f[i])
            .collect();
        let int2_im: Vec<f64> = (0..n)
            .map(|i| self.u_out[i].im * g[i] * self.f[i])
            .collect();
        let cum2_re = cumulative_uniform4(self.h, &int2_re);
        let cum2_im = cumulative_uniform4(self.h, &int2_im);
        let total2 = Complex64::new(cum2_re[n - 1], cum2_im[n - 1]);

        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        let mut dre = Vec::with_capacity(n);
        let mut dim = Vec::with_capacity(n);
        for i in 0..n {
            let j_tail = total2 - Complex64::new(cum2_re[i], cum2_im[i]);
            let (u, du) = if i == 0 {
                (
                    -(self.u_reg[0] * j_tail) / self.w_abel,
                    -(self.du_reg[0] * j_tail) / self.w_abel,
                )
            } else {
                (
                    -(self.u_out[i] * i1[i] + self.u_reg[i] * j_tail) / self.w_abel,
                    -(self.du_out[i] * i1[i] + self.du_reg[i] * j_tail) / self.w_abel,
                )
            };
            re.push(u.re);
            im.push(u.im);
            dre.push(du.re);
            dim.push(du.im);
        }
        Ok(ComplexRadialField {
            grid: self.grid.clone(),
            re,
            im,
            re_deriv: dre,
            im_deriv: dim,
            lambda: self.lambda,
            geometry: self.geom.label(),
            route: "variation_of_parameters".into(),
        })
    }

    /// Largest Helmholtz residual |-(u'' + ell u' + V u) - g| over interior
    /// nodes (fourth-order stencil for u''), plus the residual of the
    /// homogeneous imaginary part.  Returns (inhomogeneous, homogeneous).
    pub fn residuals(&self, field: &ComplexRadialField, g: &[f64]) -> (f64, f64) {
        let n = self.grid.len();
        let h = self.h;
        let v = self.potential();
        let mut worst_r = 0.0f64;
        let mut worst_e = 0.0f64;
        for i in 2..n - 2 {
            let r = self.grid[i];
            let ell = self.geom.ell(r);
            let dd_re = (-field.re[i - 2] + 16.0 * field.re[i - 1] - 30.0 * field.re[i]
                + 16.0 * field.re[i + 1]
                - field.re[i + 2])
                / (12.0 * h * h);
            let dd_im = (-field.im[i - 2] + 16.0 * field.im[i - 1] - 30.0 * field.im[i]
                + 16.0 * field.im[i + 1]
                - field.im[i + 2])
                / (12.0 * h * h);
            let res_r = (-dd_re - ell * field.re_deriv[i] - v * field.re[i] - g[i]).abs();
            let res_e = (-dd_im - ell * field.im_deriv[i] - v * field.im[i]).abs();
            worst_r = worst_r.max(res_r);
            worst_e = worst_e.max(res_e);
        }
        (worst_r, worst_e)
    }
}

/// Direct route: convolve the mu -> 0+ kernel against the radial source g
/// over hyperbolic space, reducing the sphere integral with the law of
/// cosines cosh d = cosh r0 cosh r - sinh r0 sinh r cos(theta).
/// Only the real part (the R_lambda component) is produced.
pub fn convolve_kernel(
    n: u32,
    lambda: f64,
    g: &dyn Fn(f64) -> f64,
    g_support: (f64, f64),
    out_grid: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    if n != 2 && n != 3 {
        return Err(Error::InvalidHypothesis(format!(
            "kernel convolution implemented for hyperbolic N in {{2, 3}}, got {n}"
        )));
    }
    let (s_lo, s_hi) = g_support;
    if !(s_hi > s_lo && s_lo >= 0.0) {
        return Err(Error::DegenerateInput("empty source support".into()));
    }

    // cache G on a graded grid; N = 2 subtracts the log singularity first
    let d_max =
        (s_hi + out_grid.iter().cloned().fold(0.0, f64::max) + 1.0).max(2.0);
    let kernel = KernelTable::build(n, lambda, d_max, tol)?;

    let sphere = sphere_area(n - 2);
    let mut out = Vec::with_capacity(out_grid.len());
    let step = (0.25f64).min(std::f64::consts::PI / (4.0 * lambda));
    let count = (((s_hi - s_lo) / step).ceil() as usize).max(2);
    for &r0 in out_grid {
        // the inner integral has a kink at r = r0 (the lower limit |r - r0|
        // reflects there); split the outer panels at that point
        let mut r_panels: Vec<f64> = (0..=count)
            .map(|i| s_lo + (s_hi - s_lo) * i as f64 / count as f64)
            .collect();
        if r0 > s_lo && r0 < s_hi {
            r_panels.push(r0);
            r_panels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let integrand = |r: f64| -> f64 {
            if r <= 0.0 {
                return 0.0;
            }
            let inner = theta_integral(n, &kernel, r0, r, lambda);
            g(r) * r.sinh().powi(n as i32 - 1) * inner
        };
        out.push(sphere * gl16_panels(integrand, &r_panels));
    }
    Ok(out)
}

/// int_0^pi G(d) sin^(N-2)(theta) dtheta for hyperbolic N in {2, 3},
/// rewritten as an integral over the geodesic distance d.
fn theta_integral(n: u32, kernel: &KernelTable, r0: f64, r: f64, lambda: f64) -> f64 {
    let d_lo = (r - r0).abs();
    let d_hi = r + r0;
    if r0 < 1e-12 {
        // target point at the origin: d = r exactly
        return kernel.eval(r) * if n == 2 { std::f64::consts::PI } else { 2.0 };
    }
    let b = r0.sinh() * r.sinh();
    match n {
        3 => {
            // sin(theta) dtheta = sinh(d) dd / b; the weight cancels the
            // Jacobian exactly
            let step = (0.2f64).min(std::f64::consts::PI / (4.0 * lambda));
            let count = (((d_hi - d_lo) / step).ceil() as usize).max(2);
            let bounds: Vec<f64> = (0..=count)
                .map(|i| d_lo + (d_hi - d_lo) * i as f64 / count as f64)
                .collect();
            gl16_panels(|d| kernel.eval(d) * d.sinh(), &bounds) / b
        }
        2 => {
            // dtheta = sinh(d) dd / (b sin theta) with
            // b sin(theta) = sqrt((cosh d - cosh d_lo)(cosh d_hi - cosh d)):
            // inverse square roots at both ends, removed by d = end -+ w^2
            let mid = 0.5 * (d_lo + d_hi);
            let lower = |w: f64| -> f64 {
                let d = d_lo + w * w;
                let lo_part = 2.0 * (d_lo + 0.5 * w * w).sinh() * (0.5 * w * w).sinh();
                let hi_part = d_hi.cosh() - d.cosh();
                if lo_part <= 0.0 || hi_part <= 0.0 {
                    return 0.0;
                }
                kernel.eval(d) * d.sinh() * 2.0 * w / (lo_part * hi_part).sqrt()
            };
            let upper = |w: f64| -> f64 {
                let d = d_hi - w * w;
                let hi_part = 2.0 * (d_hi - 0.5 * w * w).sinh() * (0.5 * w * w).sinh();
                let lo_part = d.cosh() - d_lo.cosh();
                if lo_part <= 0.0 || hi_part <= 0.0 {
                    return 0.0;
                }
                kernel.eval(d) * d.sinh() * 2.0 * w / (lo_part * hi_part).sqrt()
            };
            let panels = |w_end: f64| -> Vec<f64> {
                let count = ((w_end / 0.05).ceil() as usize).clamp(4, 400);
                (0..=count)
                    .map(|i| w_end * i as f64 / count as f64)
                    .collect()
            };
            gl16_panels(lower, &panels((mid - d_lo).sqrt()))
                + gl16_panels(upper, &panels((d_hi - mid).sqrt()))
        }
        _ => unreachable!(),
    }
}

/// The mu -> 0+ kernel for the convolution route: odd N evaluates the
/// closed form per point; N = 2 tabulates the extrapolated limit with the
/// log singularity split off.
enum KernelTable {
    Closed(crate::greens::GreenKernel),
    Table {
        d: Vec<f64>,
        /// smooth remainder: G - log_coef * ln(1/d)
        smooth: Vec<f64>,
        log_coef: f64,
    },
}

impl KernelTable {
    fn build(n: u32, lambda: f64, d_max: f64, tol: f64) -> Result<Self> {
        if n % 2 == 1 {
            return Ok(KernelTable::Closed(crate::greens::build_kernel_odd(
                n, lambda, 0.0,
            )?));
        }
        let log_coef = crate::greens::euclid_singularity_const(2);
        let mut d = Vec::new();
        // graded: geometric from 1e-6 to 0.5, then uniform to d_max
        let mut x = 1e-6;
        while x < 0.5 {
            d.push(x);
            x *= 1.25;
        }
        let step = (0.05f64).min(std::f64::consts::PI / (8.0 * lambda.max(0.5)));
        while x <= d_max + step {
            d.push(x);
            x += step;
        }
        let mut smooth = Vec::with_capacity(d.len());
        for &t in &d {
            let gl = green_limit(n, lambda, t, tol.min(1e-7))?;
            smooth.push(gl.value - log_coef * (1.0 / t).ln());
        }
        Ok(KernelTable::Table {
            d,
            smooth,
            log_coef,
        })
    }

    fn eval(&self, t: f64) -> f64 {
        let (d, smooth_vals, log_coef) = match self {
            KernelTable::Closed(kern) => {
                return kern.eval_closed(t.max(1e-12)).map(|g| g.re).unwrap_or(0.0)
            }
            KernelTable::Table {
                d,
                smooth,
                log_coef,
            } => (d, smooth, *log_coef),
        };
        let t = t.max(1e-9);
        let smooth = if t <= d[0] {
            smooth_vals[0]
        } else if t >= *d.last().unwrap() {
            *smooth_vals.last().unwrap()
        } else {
            let mut lo = 0;
            let mut hi = d.len() - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if d[mid] <= t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // 4-point Lagrange on the graded grid
            let i0 = lo.saturating_sub(1).min(d.len() - 4);
            let xs = &d[i0..i0 + 4];
            let ys = &smooth_vals[i0..i0 + 4];
            let mut acc = 0.0;
            for j in 0..4 {
                let mut w = ys[j];
                for k in 0..4 {
                    if k != j {
                        w *= (t - xs[k]) / (xs[j] - xs[k]);
                    }
                }
                acc += w;
            }
            acc
        };
        smooth + log_coef * (1.0 / t).ln()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormProbeReport {
    pub p: f64,
    pub q: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// max over the full family divided by max over its first half.
    pub stabilization: f64,
}

/// Exponent admissibility for the L^p -> L^q resolvent bounds:
/// 1 <= p < 2 < q, 1/p - 1/q <= 2/N, excluding (1, N/(N-2)) and (N/2, inf).
pub fn validate_exponents(n: u32, p: f64, q: f64) -> Result<()> {
    let nf = n as f64;
    if !((1.0..2.0).contains(&p) && q > 2.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "need 1 <= p < 2 < q, got ({p}, {q})"
        )));
    }
    let gap = 1.0 / p - if q.is_infinite() { 0.0 } else { 1.0 / q };
    if gap > 2.0 / nf + 1e-12 {
        return Err(Error::ExponentOutOfRange(format!(
            "1/p - 1/q = {gap:.6} exceeds 2/N = {:.6}",
            2.0 / nf
        )));
    }
    if n > 2 && (p - 1.0).abs() < 1e-12 && (q - nf / (nf - 2.0)).abs() < 1e-12 {
        return Err(Error::ExponentOutOfRange(format!(
            "excluded endpoint (1, N/(N-2)) = (1, {})",
            nf / (nf - 2.0)
        )));
    }
    if (p - 0.5 * nf).abs() < 1e-12 && q.is_infinite() {
        return Err(Error::ExponentOutOfRange(
            "excluded endpoint (N/2, inf)".into(),
        ));
    }
    Ok(())
}

/// Weighted radial Lebesgue norm (full-space measure for radial functions).
pub fn radial_norm(grid: &[f64], values: &[f64], f: &[f64], n: u32, s: f64) -> f64 {
    if s.is_infinite() {
        return values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    }
    let sphere = sphere_area(n - 1);
    let integrand: Vec<f64> = values
        .iter()
        .zip(f)
        .map(|(&v, &fr)| v.abs().powf(s) * fr)
        .collect();
    let h = grid[1] - grid[0];
    let total = *cumulative_uniform4(h, &integrand).last().unwrap();
    (sphere * total).powf(1.0 / s)
}

/// Sampled evidence for ||R_lambda g||_q <= C ||g||_p over a seeded family
/// of bumps with varying centers and widths.
pub fn norm_probe(
    pair: &HomogeneousPair,
    n: u32,
    p: f64,
    q: f64,
    n_bumps: usize,
    seed: u64,
) -> Result<NormProbeReport> {
    validate_exponents(n, p, q)?;
    if n_bumps == 0 {
        return Err(Error::DegenerateInput("empty probe family".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(n_bumps);
    for _ in 0..n_bumps {
        let center = rng.gen_range(0.5..pair.r_max / 3.0);
        let width = rng.gen_range(0.2..2.0);
        let g: Vec<f64> = pair
            .grid
            .iter()
            .map(|&r| bump((r - center) / width))
            .collect();
        ratios.push(probe_ratio(pair, n, p, q, &g)?);
    }
    let max_ratio = ratios.iter().fold(0.0f64, |m, &v| m.max(v));
    let half_max = ratios[..ratios.len().div_ceil(2)]
        .iter()
        .fold(0.0f64, |m, &v| m.max(v));
    Ok(NormProbeReport {
        p,
        q,
        ratios,
        max_ratio,
        stabilization: max_ratio / half_max.max(1e-300),
    })
}

/// ||Re R_lambda g||_q / ||g||_p for a single source.
pub fn probe_ratio(pair: &HomogeneousPair, n: u32, p: f64, q: f64, g: &[f64]) -> Result<f64> {
    let g_norm = radial_norm(&pair.grid, g, &pair.f, n, p);
    if g_norm <= 0.0 {
        return Err(Error::DegenerateInput("probe source vanishes".into()));
    }
    let field = pair.apply_resolvent(g)?;
    let out_norm = radial_norm(&pair.grid, &field.re, &pair.f, n, q);
    Ok(out_norm / g_norm)
}

/// Smooth compactly supported bump, = e^(-1/(1-x^2)) on |x| < 1.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3_pair(lambda: f64, r_max: f64) -> HomogeneousPair {
        let geom = RadialGeometry::hyperbolic(3);
        homogeneous_pair(&geom, lambda, r_max, 1e-10, 4000).unwrap()
    }

    #[test]
    fn closed_form_pair_h3() {
        let pair = h3_pair(2.0, 30.0);
        // u_reg = sin(2r)/(2 sinh r), u_out = e^(2ir)/sinh r, W = -1
        assert!((pair.w_abel - Complex64::new(-1.0, 0.0)).norm() < 1e-8);
        assert!(pair.w_drift < 1e-8, "drift {}", pair.w_drift);
        for i in [100usize, 1000, 2500] {
            let r = pair.grid[i];
            let reg = (2.0 * r).sin() / (2.0 * r.sinh());
            let out = Complex64::new(0.0, 2.0 * r).exp() / r.sinh();
            assert!((pair.u_reg[i] - reg).abs() < 1e-9);
            assert!((pair.u_out[i] - out).norm() < 1e-8 * out.norm().max(1.0));
        }
    }

    #[test]
    fn euclidean_pair_exact_wkb() {
        // for R^3 the outgoing WKB form e^(i r)/r is exact
        let geom = RadialGeometry::euclidean(3);
        let pair = homogeneous_pair(&geom, 1.0, 30.0, 1e-10, 3000).unwrap();
        for i in [50usize, 500, 1500] {
            let r = pair.grid[i];
            let reg = r.sin() / r;
            let out = Complex64::new(0.0, r).exp() / r;
            assert!((pair.u_reg[i] - reg).abs() < 1e-9);
            assert!((pair.u_out[i] - out).norm() < 1e-8 * out.norm().max(1.0));
        }
    }

    #[test]
    fn truncation_guard_fires() {
        // the outgoing seed is exact on H^3 (and R^3), so the guard can
        // only fire where the WKB defect survives: H^5 at short range ...
        let geom5 = RadialGeometry::hyperbolic(5);
        assert!(matches!(
            homogeneous_pair(&geom5, 1.0, 5.0, 1e-9, 500),
            Err(Error::TruncationTooSmall { .. })
        ));
        assert!(homogeneous_pair(&geom5, 1.0, 12.0, 1e-9, 1200).is_ok());
        // ... and Euclidean N=2 with its O(1/r^2) defect
        let geom2 = RadialGeometry::euclidean(2);
        assert!(matches!(
            homogeneous_pair(&geom2, 1.0, 30.0, 1e-9, 500),
            Err(Error::TruncationTooSmall { .. })
        ));
        let geom3 = RadialGeometry::hyperbolic(3);
        assert!(homogeneous_pair(&geom3, 1.0, 8.0, 1e-9, 800).is_ok());
    }

    #[test]
    fn zero_source_zero_field() {
        let pair = h3_pair(1.0, 25.0);
        let g = vec![0.0; pair.grid.len()];
        let field = pair.apply_resolvent(&g).unwrap();
        assert!(field.re.iter().all(|&v| v == 0.0));
        assert!(field.im.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn support_violation_detected() {
        let pair = h3_pair(1.0, 25.0);
        let g: Vec<f64> = pair.grid.iter().map(|&r| (-0.1 * r).exp()).collect();
        assert!(matches!(
            pair.apply_resolvent(&g),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn resolvent_residuals_small() {
        let geom = RadialGeometry::hyperbolic(3);
        let pair = homogeneous_pair(&geom, 1.0, 30.0, 1e-10, 12000).unwrap();
        let g: Vec<f64> = pair.grid.iter().map(|&r| bump((r - 1.8) / 0.8)).collect();
        let field = pair.apply_resolvent(&g).unwrap();
        assert!(field.is_finite());
        let (res_r, res_e) = pair.residuals(&field, &g);
        assert!(res_r < 1e-7, "inhomogeneous residual {res_r:.3e}");
        assert!(res_e < 1e-7, "homogeneous residual {res_e:.3e}");
        // outgoing decay: |u| f^(1/2) bounded on the tail
        let n = pair.grid.len();
        let mut tail_max: f64 = 0.0;
        for i in (3 * n / 4)..n {
            tail_max = tail_max.max(field.value(i).norm() * pair.f[i].sqrt());
        }
        let mut mid_max: f64 = 0.0;
        for i in (n / 3)..(2 * n / 5) {
            mid_max = mid_max.max(field.value(i).norm() * pair.f[i].sqrt());
        }
        assert!(tail_max < 5.0 * mid_max + 1.0);
    }

    #[test]
    fn doubling_r_max_stable_interior() {
        let pair1 = h3_pair(1.0, 25.0);
        let geom = RadialGeometry::hyperbolic(3);
        let pair2 = homogeneous_pair(&geom, 1.0, 50.0, 1e-10, 8000).unwrap();
        let g1: Vec<f64> = pair1.grid.iter().map(|&r| bump((r - 2.0) / 0.7)).collect();
        let g2: Vec<f64> = pair2.grid.iter().map(|&r| bump((r - 2.0) / 0.7)).collect();
        let f1 = pair1.apply_resolvent(&g1).unwrap();
        let f2 = pair2.apply_resolvent(&g2).unwrap();
        let mut worst = 0.0f64;
        for (i, &r) in pair1.grid.iter().enumerate() {
            if r > 10.0 {
                break;
            }
            let idx = (r / pair2.h).round() as usize;
            worst = worst.max((f1.value(i) - f2.value(idx)).norm());
        }
        assert!(worst < 1e-7, "interior drift {worst:.3e}");
    }

    #[test]
    fn exponent_validation() {
        assert!(validate_exponents(3, 1.5, 6.0).is_ok());
        assert!(matches!(
            validate_exponents(3, 1.0, 3.0),
            Err(Error::ExponentOutOfRange(_))
        ));
        assert!(matches!(
            validate_exponents(3, 1.5, f64::INFINITY),
            Err(Error::ExponentOutOfRange(_))
        ));
        // (N/2, inf) for N = 2 collides with p = 1
        assert!(validate_exponents(2, 1.0, f64::INFINITY).is_err());
        assert!(matches!(
            validate_exponents(3, 2.5, 6.0),
            Err(Error::ExponentOutOfRange(_))
        ));
        // 1/p - 1/q too large
        assert!(matches!(
            validate_exponents(5, 1.0, 100.0),
            Err(Error::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn norm_probe_stabilizes() {
        let pair = h3_pair(1.0, 25.0);
        let rep = norm_probe(&pair, 3, 1.5, 6.0, 20, 42).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert!(rep.stabilization <= 10.0, "{rep:?}");
        // degenerate input rejected
        let g = vec![0.0; pair.grid.len()];
        assert!(matches!(
            probe_ratio(&pair, 3, 1.5, 6.0, &g),
            Err(Error::DegenerateInput(_))
        ));
    }
}
