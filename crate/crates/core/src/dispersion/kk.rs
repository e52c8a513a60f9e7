//! Kramers-Kronig transform of a sampled imaginary part.
//!
//! `Re Δf(ω) = (1/π) P∫ Im Δf(ω') / (ω' - ω) dω'`
//!
//! The pole is removed by subtracting `Im Δf(ω)` under the integral, whose
//! principal value over the grid is a logarithm. Beyond the grid the
//! imaginary part is continued as `Im(edge)·L²/(ω' - c)²`, where `c` is the
//! grid midpoint and `L` its half span; those wing integrals are analytic.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KkResult {
    pub re: Vec<f64>,
    /// Accuracy warnings (short wings, coarse sampling near the peak).
    pub warnings: Vec<String>,
}

/// Real part on the same grid as `energies`.
pub fn kramers_kronig(energies: &[f64], im: &[f64]) -> Result<KkResult> {
    let n = energies.len();
    if n != im.len() {
        return Err(Error::Input("energy and Im Δf columns differ in length".into()));
    }
    if n < 3 {
        return Err(Error::Input("Kramers-Kronig needs at least 3 samples".into()));
    }
    for w in energies.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Input(format!(
                "Kramers-Kronig abscissae must be strictly increasing and unique ({} then {})",
                w[0], w[1]
            )));
        }
    }
    let (a, b) = (energies[0], energies[n - 1]);
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let slope = derivatives(energies, im);

    let re = (0..n)
        .map(|i| {
            let w = energies[i];
            let fi = im[i];
            let mut acc = 0.0;
            // trapezoid over the regular residual
            let g = |j: usize| {
                if j == i {
                    slope[i]
                } else {
                    (im[j] - fi) / (energies[j] - w)
                }
            };
            let mut gprev = g(0);
            for j in 1..n {
                let gj = g(j);
                acc += 0.5 * (gj + gprev) * (energies[j] - energies[j - 1]);
                gprev = gj;
            }
            acc += log_and_wings(w - c, half, fi, im[0], im[n - 1], i == 0, i == n - 1);
            acc / std::f64::consts::PI
        })
        .collect();

    Ok(KkResult {
        re,
        warnings: coverage_warnings(energies, im),
    })
}

/// Subtracted-pole logarithm plus both analytic wing integrals at offset
/// `s = ω - c`, combined so the endpoint logarithms cancel.
fn log_and_wings(s: f64, l: f64, fi: f64, fa: f64, fb: f64, first: bool, last: bool) -> f64 {
    let hi = if last {
        fb * (l.ln() - 1.0)
    } else {
        fi * (l - s).ln() + fb * wing_hi(s, l)
    };
    let lo = if first {
        fa * (1.0 - l.ln())
    } else {
        -fi * (l + s).ln() + fa * wing_lo(s, l)
    };
    hi + lo
}

/// `∫_L^∞ L² / (u² (u - s)) du` for |s| < L.
fn wing_hi(s: f64, l: f64) -> f64 {
    let x = s / l;
    if x.abs() < 1e-4 {
        0.5 + x / 3.0 + x * x / 4.0
    } else {
        -1.0 / x - (-x).ln_1p() / (x * x)
    }
}

/// `∫_{-∞}^{-L} L² / (u² (u - s)) du` for |s| < L.
fn wing_lo(s: f64, l: f64) -> f64 {
    let x = s / l;
    if x.abs() < 1e-4 {
        -0.5 + x / 3.0 - x * x / 4.0
    } else {
        -1.0 / x + x.ln_1p() / (x * x)
    }
}

/// Three-point derivative on a non-uniform grid, one-sided at the ends.
fn derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (y[1] - y[0]) / (x[1] - x[0])
            } else if i == n - 1 {
                (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2])
            } else {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                (y[i + 1] * h0 * h0 - y[i - 1] * h1 * h1 + y[i] * (h1 * h1 - h0 * h0)) / (h0 * h1 * (h0 + h1))
            }
        })
        .collect()
}

/// Checks the sampling against the width of the dominant peak: spacing at
/// most a tenth of the width within five widths, wings at least a hundred
/// widths on each side.
fn coverage_warnings(x: &[f64], y: &[f64]) -> Vec<String> {
    let mut warnings = Vec::new();
    let (peak, &ymax) = match y.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) {
        Some(p) => p,
        None => return warnings,
    };
    if ymax == 0.0 {
        return warnings;
    }
    let half = 0.5 * ymax.abs();
    let mut lo = peak;
    while lo > 0 && y[lo].abs() > half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi < y.len() - 1 && y[hi].abs() > half {
        hi += 1;
    }
    if lo == 0 || hi == y.len() - 1 {
        warnings.push("peak half-maximum not resolved inside the grid".into());
        return warnings;
    }
    let width = x[hi] - x[lo];
    let centre = x[peak];
    let span = (centre - x[0]).min(x[x.len() - 1] - centre);
    if span < 100.0 * width {
        warnings.push(format!(
            "wing span {:.3} is below 100 widths ({:.3}); tails rely on extrapolation",
            span,
            100.0 * width
        ));
    }
    let coarse = x
        .windows(2)
        .filter(|w| (w[0] - centre).abs() <= 5.0 * width || (w[1] - centre).abs() <= 5.0 * width)
        .any(|w| w[1] - w[0] > 0.1 * width * (1.0 + 1e-9));
    if coarse {
        warnings.push("grid spacing near the peak exceeds a tenth of its width".into());
    }
    warnings
}
