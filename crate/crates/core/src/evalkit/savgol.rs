//! Savitzky-Golay smoothing: local least-squares polynomial fits.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: usize = 9;
pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SmoothError {
    #[error("window length {0} must be odd")]
    WindowNotOdd(usize),
    #[error("window length {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window length {window} must exceed the polynomial order {order}")]
    WindowTooSmall { window: usize, order: usize },
}

/// Treatment of the first and last `window / 2` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    /// Evaluate the polynomial fitted to the first (last) full window.
    #[default]
    Interpolate,
    /// Reflect the series about its end samples (`x[-i] = x[i]`).
    Mirror,
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(a[i * n + col]).total_cmp(&libm::fabs(a[j * n + col])))
            .unwrap_or(col);
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
}

/// Weights that map a window of `window` samples to the value of its fitted
/// polynomial at sample `at` (0-based within the window).
pub fn coefficients(window: usize, order: usize, at: usize) -> Vec<f64> {
    let half = (window / 2).max(1) as f64;
    let center = (window / 2) as f64;
    let p = order + 1;
    let powers = |x: f64| {
        let u = (x - center) / half;
        let mut v = vec![1.0; p];
        for i in 1..p {
            v[i] = v[i - 1] * u;
        }
        v
    };
    let rows: Vec<Vec<f64>> = (0..window).map(|j| powers(j as f64)).collect();
    let mut gram = vec![0.0; p * p];
    for r in &rows {
        for i in 0..p {
            for k in 0..p {
                gram[i * p + k] += r[i] * r[k];
            }
        }
    }
    let mut z = powers(at as f64);
    solve_dense(&mut gram, &mut z, p);
    rows.iter().map(|r| r.iter().zip(&z).map(|(a, b)| a * b).sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavGol {
    pub window: usize,
    pub order: usize,
    pub edge: Edge,
}

impl Default for SavGol {
    fn default() -> Self {
        SavGol { window: DEFAULT_WINDOW, order: DEFAULT_ORDER, edge: Edge::Interpolate }
    }
}

impl SavGol {
    pub fn check(&self, len: usize) -> Result<(), SmoothError> {
        if self.window.is_multiple_of(2) {
            return Err(SmoothError::WindowNotOdd(self.window));
        }
        if self.window <= self.order {
            return Err(SmoothError::WindowTooSmall { window: self.window, order: self.order });
        }
        if self.window > len {
            return Err(SmoothError::WindowTooLarge { window: self.window, len });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SmoothError> {
        self.check(x.len())?;
        let (m, k, n) = (self.window, self.window / 2, x.len());
        let center = coefficients(m, self.order, k);
        let dot = |w: &[f64], start: usize| -> f64 { w.iter().zip(&x[start..start + m]).map(|(a, b)| a * b).sum() };
        let mut out = vec![0.0; n];
        for i in k..n - k {
            out[i] = dot(&center, i - k);
        }
        match self.edge {
            Edge::Interpolate => {
                for i in 0..k {
                    out[i] = dot(&coefficients(m, self.order, i), 0);
                    let j = n - k + i;
                    out[j] = dot(&coefficients(m, self.order, k + 1 + i), n - m);
                }
            }
            Edge::Mirror => {
                let at = |i: isize| -> f64 {
                    let last = n as isize - 1;
                    let idx = if i < 0 {
                        -i
                    } else if i > last {
                        2 * last - i
                    } else {
                        i
                    };
                    x[idx as usize]
                };
                for i in (0..k).chain(n - k..n) {
                    out[i] = center.iter().enumerate().map(|(j, w)| w * at(i as isize - k as isize + j as isize)).sum();
                }
            }
        }
        Ok(out)
    }
}

/// Order-`order` smoothing with interpolated edges.
pub fn smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>, SmoothError> {
    SavGol { window, order, edge: Edge::Interpolate }.apply(series)
}
