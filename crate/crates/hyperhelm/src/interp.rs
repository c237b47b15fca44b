//! Monotone cubic (Fritsch-Carlson) interpolation for tabulated profiles.

use crate::error::{Error, Result};

/// Piecewise-cubic Hermite interpolant with shape-preserving slopes.
/// Evaluation clamps to the end values outside the table (constant
/// extension, zero slope), so tabulated coefficients keep integrable
/// derivatives at infinity.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DegenerateInput(format!(
                "table columns have different lengths ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::DegenerateInput(
                "table needs at least two rows".into(),
            ));
        }
        for (i, (&xi, &yi)) in x.iter().zip(&y).enumerate() {
            if !xi.is_finite() || !yi.is_finite() {
                return Err(Error::DegenerateInput(format!(
                    "non-finite table entry at row {i}"
                )));
            }
            if i > 0 && xi <= x[i - 1] {
                return Err(Error::DegenerateInput(format!(
                    "table abscissae must be strictly increasing (row {i})"
                )));
            }
        }
        let d = fritsch_carlson_slopes(&x, &y);
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn last_value(&self) -> f64 {
        *self.y.last().unwrap()
    }

    fn segment(&self, r: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.x[0] {
            return self.y[0];
        }
        if r >= self.x_max() {
            return self.last_value();
        }
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.x[0] || r >= self.x_max() {
            return 0.0;
        }
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let (g00, g10, g01, g11) = hermite_basis_deriv(t);
        (g00 * self.y[i] + g01 * self.y[i + 1]) / h + g10 * self.d[i] + g11 * self.d[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_basis_deriv(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];

    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }

    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            // weighted harmonic mean (PCHIP rule)
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d
}

fn endpoint_slope(h0: f64, h1: f64, delta0: f64, delta1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * delta0 - h0 * delta1) / (h0 + h1);
    if d * delta0 <= 0.0 {
        0.0
    } else if delta0 * delta1 <= 0.0 && d.abs() > 3.0 * delta0.abs() {
        3.0 * delta0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_linear_data() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y: Vec<f64> = x.iter().map(|&v| 3.0 * v - 1.0).collect();
        let c = MonotoneCubic::new(x, y).unwrap();
        for r in [0.2, 0.9, 1.7, 3.3] {
            assert!((c.value(r) - (3.0 * r - 1.0)).abs() < 1e-12);
            assert!((c.derivative(r) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn preserves_monotone_data() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|&v| 2.0 + (-v).exp()).collect();
        let c = MonotoneCubic::new(x.clone(), y).unwrap();
        let mut prev = c.value(0.0);
        let mut r = 0.01;
        while r < 14.5 {
            let cur = c.value(r);
            assert!(cur <= prev + 1e-12, "interpolant not monotone at r={r}");
            prev = cur;
            r += 0.013;
        }
    }

    #[test]
    fn clamps_outside_table() {
        let c = MonotoneCubic::new(vec![1.0, 2.0, 3.0], vec![5.0, 4.0, 2.0]).unwrap();
        assert_eq!(c.value(0.0), 5.0);
        assert_eq!(c.value(10.0), 2.0);
        assert_eq!(c.derivative(10.0), 0.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0, 0.5], vec![1.0, 2.0, 3.0]).is_err());
    }
}
