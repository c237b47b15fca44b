//! Quadrature and small linear-algebra helpers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 16-point Gauss-Legendre abscissae (positive half) and weights.
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

pub fn gl16<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GL16_W[i] * (f(c - h * GL16_X[i]) + f(c + h * GL16_X[i]));
    }
    acc * h
}

pub fn gl16_complex<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64) -> Complex64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..8 {
        acc += GL16_W[i] * (f(c - h * GL16_X[i]) + f(c + h * GL16_X[i]));
    }
    acc * h
}

/// Composite GL16 over given panel boundaries.
pub fn gl16_panels<F: FnMut(f64) -> f64>(mut f: F, boundaries: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in boundaries.windows(2) {
        acc += gl16(&mut f, w[0], w[1]);
    }
    acc
}

pub fn gl16_panels_complex<F: FnMut(f64) -> Complex64>(mut f: F, boundaries: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for w in boundaries.windows(2) {
        acc += gl16_complex(&mut f, w[0], w[1]);
    }
    acc
}

/// Adaptive composite GL16 on [a, b]: panels are doubled until two sweeps
/// agree to `tol` (relative to the magnitude of the integral).
pub fn adaptive_gl16<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_doublings: usize,
) -> Result<f64> {
    let mut n = 4usize;
    let mut prev = composite(&mut f, a, b, n);
    for _ in 0..max_doublings {
        n *= 2;
        let cur = composite(&mut f, a, b, n);
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure(format!(
        "adaptive GL16 did not reach tol {tol} on [{a}, {b}]"
    )))
}

fn composite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += gl16(&mut *f, a + i as f64 * h, a + (i + 1) as f64 * h);
    }
    acc
}

/// Cumulative trapezoid on an arbitrary grid.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
        out.push(acc);
    }
    out
}

/// Fourth-order cumulative integral on a uniform grid with spacing `h`.
/// Interior intervals use the symmetric four-point rule
///   int_{x_i}^{x_{i+1}} f = h/24 (-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2}),
/// end intervals the one-sided cubic rule.
pub fn cumulative_uniform4(h: f64, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 4, "cumulative_uniform4 needs at least 4 nodes");
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    let c = h / 24.0;
    // first interval: one-sided
    let mut acc = c * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]);
    out.push(acc);
    for i in 1..n - 2 {
        acc += c * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2]);
        out.push(acc);
    }
    // last interval: mirrored one-sided
    acc += c * (y[n - 4] - 5.0 * y[n - 3] + 19.0 * y[n - 2] + 9.0 * y[n - 1]);
    out.push(acc);
    out
}

/// Slope of the least-squares line through (x_i, y_i); returns (slope,
/// intercept).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Dense LU solve with partial pivoting; `a` is row-major n x n and is
/// consumed.  Used by the dual critical-point polish, where the system is a
/// few hundred unknowns.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col][col].abs();
        for row in col + 1..n {
            let v = a[row][col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return Err(Error::Solver("singular matrix in dense solve".into()));
        }
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
        }
        let inv = 1.0 / a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
