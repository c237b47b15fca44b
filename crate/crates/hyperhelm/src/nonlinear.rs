//! Nonlinear solutions of the radial Helmholtz equation
//!
//! ```text
//! (L - lambda^2) u = Gamma |u|^(p-2) u
//! ```
//!
//! Small solutions: Picard iteration u <- w + R_lambda(Gamma |u|^(p-2) u)
//! seeded by a small multiple w of the regular homogeneous solution; the
//! contraction lives in the weighted sup norm ||u (1+f)^(1/2)||_inf and the
//! smallness condition sup |u| <= 1/2 is verified a posteriori.
//!
//! Large solutions: critical points of the dual functional
//!
//! ```text
//! J(v) = (1/p') int |v|^p' dV - (1/2) int Gamma^(1/p) v R_lambda(Gamma^(1/p) v) dV
//! ```
//!
//! located by a ray maximization (mountain-pass geometry along t -> t z)
//! followed by residual descent with a diagonal preconditioner, backtracking
//! on the residual merit norm and ray rescaling of accepted iterates, and a
//! final Newton polish on the same merit.  The recovered primal field is
//! u = R_lambda(Gamma^(1/p) v).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{sphere_area, RadialGeometry};
use crate::profile::{odd_pow, CoefficientProfile, RadialProfile};
use crate::quad::{cumulative_uniform4, solve_dense};
use crate::resolvent::{bump, homogeneous_pair, HomogeneousPair};
use crate::solver::solve_radial_ivp;

#[derive(Debug, Clone)]
pub struct RealRadialField {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationHistory {
    pub step_norms: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Helmholtz residual of the final iterate (not a step norm).
    pub final_residual: f64,
    pub sup_norm: f64,
    /// ||u - w||_inf / eps^(p-1): the measured first-correction scale.
    pub correction_ratio: f64,
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SmallSolution {
    pub field: RealRadialField,
    pub seed_amplitude: f64,
    pub history: IterationHistory,
}

/// Fixed-point construction of a small solution.
#[allow(clippy::too_many_arguments)]
pub fn small_solution(
    geom: &RadialGeometry,
    lambda: f64,
    gamma_w: &RadialProfile,
    p: f64,
    eps: f64,
    r_max: f64,
    tol: f64,
    max_iter: usize,
    n_cells: usize,
) -> Result<SmallSolution> {
    if !(eps >= 0.0) || !(p > 2.0) {
        return Err(Error::InvalidHypothesis(format!(
            "need eps >= 0 and p > 2, got eps={eps}, p={p}"
        )));
    }
    let pair = homogeneous_pair(geom, lambda, r_max, tol, n_cells)?;
    let n = pair.grid.len();

    // seed: radial slice of a Herglotz wave, normalized to amplitude eps
    let reg_sup = pair.u_reg.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let w: Vec<f64> = pair.u_reg.iter().map(|&v| eps * v / reg_sup).collect();
    let dw: Vec<f64> = pair.du_reg.iter().map(|&v| eps * v / reg_sup).collect();
    let weight: Vec<f64> = pair.f.iter().map(|&fr| (1.0 + fr).sqrt()).collect();
    let gamma_vals: Vec<f64> = pair.grid.iter().map(|&r| gamma_w.value(r)).collect();

    let mut u = w.clone();
    let mut du = dw.clone();
    let mut history = IterationHistory {
        step_norms: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
        iterations: 0,
        final_residual: f64::NAN,
        sup_norm: 0.0,
        correction_ratio: 0.0,
        iterates: vec![u.clone()],
    };

    for k in 0..max_iter {
        let g: Vec<f64> = (0..n)
            .map(|i| gamma_vals[i] * odd_pow(u[i], p - 1.0))
            .collect();
        let rf = pair.apply_resolvent(&g)?;
        let mut next = Vec::with_capacity(n);
        let mut dnext = Vec::with_capacity(n);
        for i in 0..n {
            next.push(w[i] + rf.re[i]);
            dnext.push(dw[i] + rf.re_deriv[i]);
        }
        let step = (0..n)
            .map(|i| (next[i] - u[i]).abs() * weight[i])
            .fold(0.0f64, f64::max);
        history.step_norms.push(step);
        if let [.., prev, last] = history.step_norms[..] {
            if prev > 0.0 {
                history.contraction_ratios.push(last / prev);
            }
        }
        u = next;
        du = dnext;
        history.iterates.push(u.clone());
        history.iterations = k + 1;
        let sup = u.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if sup > 0.5 {
            return Err(Error::CutoffViolated { sup });
        }
        if step <= tol * eps.max(1e-6) {
            history.converged = true;
            break;
        }
        // three consecutive expansions signal divergence
        if history.contraction_ratios.len() >= 3
            && history
                .contraction_ratios
                .iter()
                .rev()
                .take(3)
                .all(|&r| r >= 1.0)
        {
            return Err(Error::NoConvergence {
                iterations: k + 1,
                last: step,
            });
        }
    }
    if !history.converged {
        return Err(Error::NoConvergence {
            iterations: max_iter,
            last: *history.step_norms.last().unwrap_or(&f64::NAN),
        });
    }

    history.sup_norm = u.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let diff = (0..n).map(|i| (u[i] - w[i]).abs()).fold(0.0f64, f64::max);
    history.correction_ratio = if eps > 0.0 {
        diff / eps.powf(p - 1.0)
    } else {
        0.0
    };
    history.final_residual = nlh_residual(&pair, &gamma_vals, p, &u, &du);

    Ok(SmallSolution {
        field: RealRadialField {
            grid: pair.grid.clone(),
            u,
            du,
        },
        seed_amplitude: eps,
        history,
    })
}

/// Largest NLH residual |-(u'' + ell u' + V u) - Gamma |u|^(p-2) u| over
/// interior grid nodes (fourth-order stencil for u'').
pub fn nlh_residual(
    pair: &HomogeneousPair,
    gamma_vals: &[f64],
    p: f64,
    u: &[f64],
    du: &[f64],
) -> f64 {
    let n = u.len();
    let h = pair.h;
    let v = pair.potential();
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        let r = pair.grid[i];
        let dd = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2])
            / (12.0 * h * h);
        let res = (-dd
            - pair.geom.ell(r) * du[i]
            - v * u[i]
            - gamma_vals[i] * odd_pow(u[i], p - 1.0))
        .abs();
        worst = worst.max(res);
    }
    worst
}

/// Shared state for the dual variational problem on a pair's grid.
pub struct DualContext<'a> {
    pub pair: &'a HomogeneousPair,
    pub p: f64,
    pub p_dual: f64,
    pub sphere: f64,
    /// Gamma^(1/p) on the grid.
    pub gamma_pow: Vec<f64>,
    gamma_vals: Vec<f64>,
    gamma_profile: RadialProfile,
}

impl<'a> DualContext<'a> {
    pub fn new(
        pair: &'a HomogeneousPair,
        gamma_w: &RadialProfile,
        p: f64,
        n_dim: u32,
    ) -> Result<Self> {
        let gamma_vals: Vec<f64> = pair.grid.iter().map(|&r| gamma_w.value(r)).collect();
        if gamma_vals.iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidHypothesis(
                "dual functional needs Gamma >= 0".into(),
            ));
        }
        let p_max = if n_dim >= 3 {
            2.0 * n_dim as f64 / (n_dim as f64 - 2.0)
        } else {
            f64::INFINITY
        };
        if !(p > 2.0 && p < p_max) {
            return Err(Error::ExponentOutOfRange(format!(
                "dual search needs 2 < p < {p_max}, got {p}"
            )));
        }
        Ok(DualContext {
            pair,
            p,
            p_dual: p / (p - 1.0),
            sphere: sphere_area(n_dim - 1),
            gamma_pow: gamma_vals.iter().map(|&g| g.powf(1.0 / p)).collect(),
            gamma_vals,
            gamma_profile: gamma_w.clone(),
        })
    }

    fn integral(&self, values: &[f64]) -> f64 {
        let weighted: Vec<f64> = values
            .iter()
            .zip(&self.pair.f)
            .map(|(&v, &fr)| v * fr)
            .collect();
        self.sphere
            * cumulative_uniform4(self.pair.h, &weighted)
                .last()
                .unwrap()
    }

    /// K v = Gamma^(1/p) R_lambda(Gamma^(1/p) v).
    pub fn apply_k(&self, v: &[f64]) -> Result<Vec<f64>> {
        let g: Vec<f64> = v
            .iter()
            .zip(&self.gamma_pow)
            .map(|(&vi, &gp)| gp * vi)
            .collect();
        let field = self.pair.apply_resolvent(&g)?;
        Ok(field
            .re
            .iter()
            .zip(&self.gamma_pow)
            .map(|(&ri, &gp)| gp * ri)
            .collect())
    }

    /// Recover the primal field u = R_lambda(Gamma^(1/p) v).
    pub fn recover(&self, v: &[f64]) -> Result<RealRadialField> {
        let g: Vec<f64> = v
            .iter()
            .zip(&self.gamma_pow)
            .map(|(&vi, &gp)| gp * vi)
            .collect();
        let field = self.pair.apply_resolvent(&g)?;
        Ok(RealRadialField {
            grid: self.pair.grid.clone(),
            u: field.re,
            du: field.re_deriv,
        })
    }

    pub fn nlh_residual_of(&self, field: &RealRadialField) -> f64 {
        nlh_residual(self.pair, &self.gamma_vals, self.p, &field.u, &field.du)
    }

    /// Dual variable induced by a primal field: Gamma^(1/p') |u|^(p-2) u.
    pub fn dual_of_primal(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.gamma_vals)
            .map(|(&ui, &g)| g.powf(1.0 / self.p_of_dual()) * odd_pow(ui, self.p - 1.0))
            .collect()
    }

    fn p_of_dual(&self) -> f64 {
        // p' conjugate: Gamma^(1/p') weight
        self.p / (self.p - 1.0)
    }
}

/// J(v) for grid samples of the dual variable.
pub fn dual_functional(ctx: &DualContext, v: &[f64]) -> Result<f64> {
    let pd = ctx.p_dual;
    let kv = ctx.apply_k(v)?;
    let lp: Vec<f64> = v.iter().map(|&vi| vi.abs().powf(pd)).collect();
    let cross: Vec<f64> = v.iter().zip(&kv).map(|(&vi, &ki)| vi * ki).collect();
    Ok(ctx.integral(&lp) / pd - 0.5 * ctx.integral(&cross))
}

/// |v|^(p'-2) v - Gamma^(1/p) R_lambda(Gamma^(1/p) v): vanishes at critical
/// points of J.
pub fn dual_residual(ctx: &DualContext, v: &[f64]) -> Result<Vec<f64>> {
    let kv = ctx.apply_k(v)?;
    Ok(v.iter()
        .zip(&kv)
        .map(|(&vi, &ki)| odd_pow(vi, ctx.p_dual - 1.0) - ki)
        .collect())
}

/// Ray diagnostics along t -> t z: with A = int |z|^p' and
/// B = int Gamma^(1/p) z R(Gamma^(1/p) z) > 0 the map t -> J(tz) has its
/// unique interior maximum at t* = (A/B)^(1/(2-p')).
pub struct RayMax {
    pub t_star: f64,
    pub j_at_max: f64,
    pub b_positive: bool,
}

pub fn ray_maximum(ctx: &DualContext, z: &[f64]) -> Result<RayMax> {
    let pd = ctx.p_dual;
    let lp: Vec<f64> = z.iter().map(|&vi| vi.abs().powf(pd)).collect();
    let a = ctx.integral(&lp);
    let kz = ctx.apply_k(z)?;
    let cross: Vec<f64> = z.iter().zip(&kz).map(|(&vi, &ki)| vi * ki).collect();
    let b = ctx.integral(&cross);
    if b <= 0.0 || a <= 0.0 {
        return Ok(RayMax {
            t_star: 0.0,
            j_at_max: 0.0,
            b_positive: false,
        });
    }
    let t_star = (a / b).powf(1.0 / (2.0 - pd));
    let j_at_max = (1.0 / pd - 0.5) * t_star * t_star * b;
    Ok(RayMax {
        t_star,
        j_at_max,
        b_positive: true,
    })
}

#[derive(Debug, Clone)]
pub struct DualState {
    pub grid: Vec<f64>,
    pub v: Vec<f64>,
    pub j_value: f64,
    pub residual: Vec<f64>,
    pub rel_residual: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub nlh_residual: f64,
    /// Mountain-pass geometry evidence along the seed ray.
    pub j_ray_max: f64,
    pub j_far: f64,
    pub iterations: usize,
    pub newton_steps: usize,
}

/// Weighted L^2 norm used as the descent merit.
fn merit_norm(ctx: &DualContext, vals: &[f64]) -> f64 {
    let sq: Vec<f64> = vals.iter().map(|&x| x * x).collect();
    ctx.integral(&sq).max(0.0).sqrt()
}

/// Critical point search for the dual functional: ray stage, preconditioned
/// residual descent, Newton polish.  Collapsing iterates restart from the
/// next seed.
pub fn critical_point_search(
    ctx: &DualContext,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<DualState> {
    if ctx.gamma_pow.iter().all(|&g| g == 0.0) {
        return Err(Error::InvalidHypothesis(
            "critical point search needs Gamma not identically zero".into(),
        ));
    }

    // primary seed: phase-matched shot.  The recovered primal field of any
    // critical point is an initial-amplitude solution whose homogeneous
    // component vanishes; a bisection on that component lands the seed next
    // to a critical point, and the descent stages then do the polishing.
    let mut last_err = match shooting_seed(ctx) {
        Ok(z) => match search_from_seed(ctx, &z, tol, max_iter) {
            Ok(state) => return Ok(state),
            Err(e) => e,
        },
        Err(e) => e,
    };

    // fallbacks: plain off-center bumps plus modulated ones whose spectral
    // content sits above lambda (stage (a) needs int z K z > 0)
    let lambda = ctx.pair.lambda;
    let jitter = 0.1 * (seed % 5) as f64;
    let seeds: Vec<(f64, f64, f64)> = vec![
        (0.0, 1.0 + jitter, 0.8),
        (2.0 * lambda, 2.0 + jitter, 1.5),
        (3.0 * lambda, 2.0, 1.5),
    ];
    for (omega, center, width) in seeds {
        let z: Vec<f64> = ctx
            .pair
            .grid
            .iter()
            .map(|&r| bump((r - center) / width) * (omega * r).cos())
            .collect();
        match search_from_seed(ctx, &z, tol, max_iter) {
            Ok(state) => return Ok(state),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Homogeneous component of the initial-amplitude solution u_gamma0:
/// c(gamma0) = gamma0 - Re R(Gamma |u|^(p-2) u)(0).  A sign change brackets
/// an amplitude whose solution is purely the resolvent image, i.e. a dual
/// critical point.
fn shooting_seed(ctx: &DualContext) -> Result<Vec<f64>> {
    let pair = ctx.pair;
    let coeffs = CoefficientProfile::helmholtz(
        &pair.geom,
        pair.lambda,
        ctx.gamma_profile.clone(),
        ctx.p,
    )?;
    let homogeneous_component = |g0: f64, ivp_tol: f64| -> Result<(f64, Vec<f64>)> {
        let sol = solve_radial_ivp(&pair.geom, &coeffs, g0, pair.r_max, ivp_tol)?;
        let mut primal = Vec::with_capacity(pair.grid.len());
        let src: Vec<f64> = pair
            .grid
            .iter()
            .map(|&r| {
                let (u, _) = sol.eval(r);
                primal.push(u);
                ctx.gamma_profile.value(r) * odd_pow(u, ctx.p - 1.0)
            })
            .collect();
        let rf = pair.apply_resolvent(&src)?;
        Ok((g0 - rf.re[0], primal))
    };

    // the ladder and bisection run at a coarse IVP tolerance; only the
    // final seed solve is tight
    let coarse = 1e-8;
    let fine = pair.tol.clamp(1e-12, 1e-9);
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut g0 = 0.25;
    while g0 <= 24.0 {
        let (c, _) = homogeneous_component(g0, coarse)?;
        if let Some((pg, pc)) = prev {
            if pc * c < 0.0 {
                bracket = Some((pg, pc, g0, c));
                break;
            }
        }
        prev = Some((g0, c));
        g0 *= 1.5;
    }
    let (mut lo, mut c_lo, mut hi, _c_hi) = bracket.ok_or(Error::TrivialCollapse)?;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (c_mid, _) = homogeneous_component(mid, coarse)?;
        if c_mid * c_lo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            c_lo = c_mid;
        }
        if hi - lo < 1e-11 * hi {
            break;
        }
    }
    let (_, primal) = homogeneous_component(0.5 * (lo + hi), fine)?;
    Ok(ctx.dual_of_primal(&primal))
}

fn search_from_seed(ctx: &DualContext, z: &[f64], tol: f64, max_iter: usize) -> Result<DualState> {
    let n = ctx.pair.grid.len();
    let pd = ctx.p_dual;

    // stage (a): scale the seed to the ray maximum
    let ray = ray_maximum(ctx, z)?;
    if !ray.b_positive {
        return Err(Error::TrivialCollapse);
    }
    let mut v: Vec<f64> = z.iter().map(|&zi| ray.t_star * zi).collect();
    let j_far = {
        let far: Vec<f64> = z.iter().map(|&zi| 3.0 * ray.t_star * zi).collect();
        dual_functional(ctx, &far)?
    };
    let v0_sup = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));

    let rel_of = |v: &[f64], res: &[f64]| -> f64 {
        let scale: Vec<f64> = v.iter().map(|&vi| odd_pow(vi, pd - 1.0)).collect();
        merit_norm(ctx, res) / merit_norm(ctx, &scale).max(1e-300)
    };

    // stage (b): preconditioned residual descent with backtracking and ray
    // rescaling of accepted candidates
    let mut res = dual_residual(ctx, &v)?;
    let mut m = merit_norm(ctx, &res);
    let mut iterations = 0usize;
    for _ in 0..max_iter {
        if rel_of(&v, &res) <= tol {
            break;
        }
        iterations += 1;
        let v_sup = v.iter().fold(0.0f64, |mx, &x| mx.max(x.abs()));
        if v_sup < 1e-10 * v0_sup {
            return Err(Error::TrivialCollapse);
        }
        let floor = 1e-3 * v_sup;
        let precond: Vec<f64> = v
            .iter()
            .map(|&vi| 1.0 / ((pd - 1.0) * vi.abs().max(floor).powf(pd - 2.0)))
            .collect();
        let mut s = 1.0;
        let mut advanced = false;
        while s > 1e-6 {
            let cand: Vec<f64> = (0..n).map(|i| v[i] - s * precond[i] * res[i]).collect();
            let cand_res = dual_residual(ctx, &cand)?;
            let cand_m = merit_norm(ctx, &cand_res);
            let ray_c = ray_maximum(ctx, &cand)?;
            let mut best = (cand, cand_res, cand_m);
            if ray_c.b_positive && (ray_c.t_star - 1.0).abs() > 1e-12 {
                let scaled: Vec<f64> = best.0.iter().map(|&x| ray_c.t_star * x).collect();
                let scaled_res = dual_residual(ctx, &scaled)?;
                let scaled_m = merit_norm(ctx, &scaled_res);
                if scaled_m < best.2 {
                    best = (scaled, scaled_res, scaled_m);
                }
            }
            if best.2 < m * (1.0 - 1e-4 * s) {
                v = best.0;
                res = best.1;
                m = best.2;
                advanced = true;
                break;
            }
            s *= 0.5;
        }
        if !advanced {
            break; // descent stalled; hand over to the Newton polish
        }
    }

    // Newton polish on the residual, still monotone in the merit norm
    let mut newton_steps = 0usize;
    if rel_of(&v, &res) > tol {
        let k_mat = materialize_k(ctx)?;
        while rel_of(&v, &res) > tol && newton_steps < 25 {
            newton_steps += 1;
            let v_sup = v.iter().fold(0.0f64, |mx, &x| mx.max(x.abs()));
            if v_sup < 1e-10 * v0_sup {
                return Err(Error::TrivialCollapse);
            }
            let floor = 1e-8 * v_sup;
            // Jacobian of F(v) = |v|^(p'-2) v - K v
            let mut jac: Vec<Vec<f64>> = k_mat
                .iter()
                .map(|row| row.iter().map(|&x| -x).collect())
                .collect();
            for i in 0..n {
                jac[i][i] += (pd - 1.0) * v[i].abs().max(floor).powf(pd - 2.0);
            }
            let delta = solve_dense(jac, res.clone())?;
            let mut s = 1.0;
            let mut advanced = false;
            while s > 1e-8 {
                let cand: Vec<f64> = (0..n).map(|i| v[i] - s * delta[i]).collect();
                let cand_res = dual_residual(ctx, &cand)?;
                let cand_m = merit_norm(ctx, &cand_res);
                if cand_m < m {
                    v = cand;
                    res = cand_res;
                    m = cand_m;
                    advanced = true;
                    break;
                }
                s *= 0.5;
            }
            if !advanced {
                break;
            }
        }
    }

    let rel = rel_of(&v, &res);
    if rel > tol {
        return Err(Error::NoConvergence {
            iterations: iterations + newton_steps,
            last: rel,
        });
    }

    let field = ctx.recover(&v)?;
    let j_value = dual_functional(ctx, &v)?;
    Ok(DualState {
        grid: ctx.pair.grid.clone(),
        v,
        j_value,
        rel_residual: rel,
        nlh_residual: ctx.nlh_residual_of(&field),
        u: field.u,
        du: field.du,
        residual: res,
        j_ray_max: ray.j_at_max,
        j_far,
        iterations,
        newton_steps,
    })
}

/// Dense matrix of the linear operator K on the grid, one resolvent apply
/// per unit vector (columns are exact images of the discrete operator, so
/// the Newton Jacobian matches dual_residual bit for bit).
fn materialize_k(ctx: &DualContext) -> Result<Vec<Vec<f64>>> {
    let pair = ctx.pair;
    let n = pair.grid.len();
    let mut k = vec![vec![0.0; n]; n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = ctx.gamma_pow[j];
        let col = pair.apply_resolvent_impl(&unit, false)?;
        unit[j] = 0.0;
        for i in 0..n {
            k[i][j] = ctx.gamma_pow[i] * col.re[i];
        }
    }
    Ok(k)
}
