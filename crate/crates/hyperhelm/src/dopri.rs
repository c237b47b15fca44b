//! Dormand-Prince 5(4) adaptive integrator with quartic dense output.
//!
//! Direction-aware (t_end may be below t0, used for the backward outgoing
//! solution), with an optional guard predicate that stops the integration
//! early (overflow classification).

use crate::error::{Error, Result};

pub type Guard<'a, const D: usize> = &'a dyn Fn(f64, &[f64; D]) -> bool;

#[derive(Debug, Clone)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-9,
            atol: 1e-9,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Step<const D: usize> {
    pub t0: f64,
    pub h: f64,
    pub cont: [[f64; 5]; D],
}

#[derive(Debug, Clone)]
pub struct DenseOutput<const D: usize> {
    steps: Vec<Step<D>>,
    pub t_start: f64,
    pub t_end: f64,
    pub y_start: [f64; D],
    pub y_end: [f64; D],
}

impl<const D: usize> DenseOutput<D> {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Node abscissae (step endpoints, including t_start).
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.t_start);
        for s in &self.steps {
            out.push(s.t0 + s.h);
        }
        out
    }

    pub fn min_step(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.h.abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn locate(&self, t: f64) -> &Step<D> {
        let forward = self.t_end >= self.t_start;
        let mut lo = 0usize;
        let mut hi = self.steps.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let starts_after = if forward {
                self.steps[mid].t0 <= t
            } else {
                self.steps[mid].t0 >= t
            };
            if starts_after {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        &self.steps[lo]
    }

    /// Evaluate the dense interpolant; `t` is clamped to the covered span.
    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = self.locate(t);
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let mut y = [0.0; D];
        for i in 0..D {
            let [c1, c2, c3, c4, c5] = s.cont[i];
            y[i] = c1 + theta * (c2 + (1.0 - theta) * (c3 + theta * (c4 + (1.0 - theta) * c5)));
        }
        y
    }

    /// Dense value together with the analytic time derivative of the
    /// interpolant (for defect control).
    pub fn eval_with_derivative(&self, t: f64) -> ([f64; D], [f64; D]) {
        let s = self.locate(t);
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let mut y = [0.0; D];
        let mut dy = [0.0; D];
        for i in 0..D {
            let [c1, c2, c3, c4, c5] = s.cont[i];
            y[i] = c1 + theta * (c2 + (1.0 - theta) * (c3 + theta * (c4 + (1.0 - theta) * c5)));
            let dtheta = c2
                + (1.0 - 2.0 * theta) * c3
                + theta * (2.0 - 3.0 * theta) * c4
                + 2.0 * theta * (1.0 - theta) * (1.0 - 2.0 * theta) * c5;
            dy[i] = dtheta / s.h;
        }
        (y, dy)
    }

    pub fn steps(&self) -> &[Step<D>] {
        &self.steps
    }
}

#[derive(Debug, Clone)]
pub struct Integration<const D: usize> {
    pub dense: DenseOutput<D>,
    /// Set when the guard predicate fired; holds the state at the stop.
    pub stopped: Option<(f64, [f64; D])>,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub fn integrate<const D: usize>(
    rhs: &mut dyn FnMut(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    t_end: f64,
    y0: [f64; D],
    opts: &Options,
    guard: Option<Guard<D>>,
) -> Result<Integration<D>> {
    assert!(t_end != t0, "empty integration span");
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut evals = 0usize;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    evals += 1;

    let mut h = match opts.h_init {
        Some(h) => h.abs().min(opts.h_max).min(span),
        None => initial_step(rhs, t, &y, &k1, dir, opts, &mut evals).min(span),
    };

    let mut steps: Vec<Step<D>> = Vec::new();
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut stopped = None;

    'outer: while (t_end - t) * dir > 1e-14 * span.max(1.0) {
        if accepted + rejected > opts.max_steps {
            return Err(Error::Solver(format!(
                "integrator exceeded {} steps at t = {t}",
                opts.max_steps
            )));
        }
        h = h.min(opts.h_max);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Solver(format!("step size underflow at t = {t}")));
        }
        let remaining = (t_end - t).abs();
        let h_step = h.min(remaining);
        let hs = h_step * dir;

        let mut k = [[0.0; D]; 7];
        k[0] = k1;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..D {
                        ys[i] += hs * a * kj[i];
                    }
                }
            }
            k[stage + 1] = rhs(t + C[stage] * hs, &ys);
            evals += 1;
        }
        // stage 7 coefficients are the 5th-order weights (FSAL)
        let y_new = {
            let mut v = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let b = A[5][j];
                if b != 0.0 {
                    for i in 0..D {
                        v[i] += hs * b * kj[i];
                    }
                }
            }
            v
        };
        let k7 = k[6];

        let mut err = 0.0f64;
        for i in 0..D {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= hs;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / D as f64).sqrt();

        if err <= 1.0 {
            // accept: build dense coefficients
            let mut cont = [[0.0; 5]; D];
            for i in 0..D {
                let dy = y_new[i] - y[i];
                let bspl = hs * k[0][i] - dy;
                cont[i][0] = y[i];
                cont[i][1] = dy;
                cont[i][2] = bspl;
                cont[i][3] = dy - hs * k7[i] - bspl;
                cont[i][4] = hs
                    * (D1 * k[0][i]
                        + D3 * k[2][i]
                        + D4 * k[3][i]
                        + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k7[i]);
            }
            steps.push(Step { t0: t, h: hs, cont });
            accepted += 1;
            t += hs;
            y = y_new;
            k1 = k7;
            if let Some(g) = guard {
                if g(t, &y) {
                    stopped = Some((t, y));
                    break 'outer;
                }
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h = h_step * fac;
        } else {
            rejected += 1;
            h = h_step * (0.9 * err.powf(-0.2)).max(0.2);
        }
    }

    let dense = DenseOutput {
        steps,
        t_start: t0,
        t_end: t,
        y_start: y0,
        y_end: y,
    };
    Ok(Integration {
        dense,
        stopped,
        accepted,
        rejected,
        rhs_evals: evals,
    })
}

fn initial_step<const D: usize>(
    rhs: &mut dyn FnMut(f64, &[f64; D]) -> [f64; D],
    t: f64,
    y: &[f64; D],
    f0: &[f64; D],
    dir: f64,
    opts: &Options,
    evals: &mut usize,
) -> f64 {
    let sc = |yi: f64| opts.atol + opts.rtol * yi.abs();
    let d0: f64 = (y.iter().map(|&v| (v / sc(v)).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d1: f64 = (y
        .iter()
        .zip(f0)
        .map(|(&yi, &fi)| (fi / sc(yi)).powi(2))
        .sum::<f64>()
        / D as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = *y;
    for i in 0..D {
        y1[i] += dir * h0 * f0[i];
    }
    let f1 = rhs(t + dir * h0, &y1);
    *evals += 1;
    let d2: f64 = (y
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(&yi, (&a, &b))| ((b - a) / sc(yi)).powi(2))
        .sum::<f64>()
        / D as f64)
        .sqrt()
        / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}
