//! Absorption spectra: conversion to `Im Δf` and white-line decomposition.

use super::{ResonanceLine, ScatteringFactorTable};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::{wave_number, Error, Result};
use std::f64::consts::PI;

/// `Im Δf(ω) = -(k/4π)·scale·μ(ω)`.
///
/// `scale` turns the measured intensity into a cross section; the sign puts
/// the result in the absorbing (`Im f <= 0`) convention.
pub fn absorption_to_im_f(energies: &[f64], mu: &[f64], scale: f64) -> Result<Vec<f64>> {
    if energies.len() != mu.len() {
        return Err(Error::Input("energy and absorption columns differ in length".into()));
    }
    if let Some((e, m)) = energies.iter().zip(mu).find(|(_, &m)| m < 0.0 || !m.is_finite()) {
        return Err(Error::DataQuality(format!(
            "absorption {m} at {e} eV is negative after background subtraction"
        )));
    }
    Ok(energies
        .iter()
        .zip(mu)
        .map(|(&e, &m)| -wave_number(e) / (4.0 * PI) * scale * m)
        .collect())
}

/// Least-squares `scale` so that `absorption_to_im_f` matches the table's
/// absorptive part at the energies inside `windows` (off-resonance regions).
pub fn calibrate_absorption_scale(
    energies: &[f64],
    mu: &[f64],
    reference: &ScatteringFactorTable,
    windows: &[(f64, f64)],
) -> Result<f64> {
    let (mut xy, mut xx) = (0.0, 0.0);
    for (&e, &m) in energies.iter().zip(mu) {
        if windows.iter().any(|&(lo, hi)| e >= lo && e <= hi) {
            let x = wave_number(e) / (4.0 * PI) * m;
            let y = -reference.f_at(e)?.im;
            xy += x * y;
            xx += x * x;
        }
    }
    if xx == 0.0 {
        return Err(Error::DataQuality(
            "no non-zero absorption inside the calibration windows".into(),
        ));
    }
    Ok(xy / xx)
}

/// Arctangent edge `amplitude·(1/2 + atan((ω - center)/width)/π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArctanStep {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl ArctanStep {
    pub fn eval(&self, energy: f64) -> f64 {
        self.amplitude * (0.5 + ((energy - self.center) / self.width).atan() / PI)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XasDecomposition {
    /// White line; `f0` holds the peak height in the units of the input curve.
    pub lorentzian: ResonanceLine,
    pub continuum: ArctanStep,
    pub background: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Set when the curve carries no resolvable white line.
    pub degenerate: bool,
}

impl XasDecomposition {
    pub fn eval(&self, energy: f64) -> f64 {
        let l = &self.lorentzian;
        let hw = 0.5 * l.gamma;
        l.f0 * hw * hw / ((energy - l.omega0).powi(2) + hw * hw) + self.continuum.eval(energy) + self.background
    }
}

/// Model curve for parameters `[A, ω0, Γ, S, Ec, W, B]`.
pub fn xas_model(p: &[f64], energy: f64) -> f64 {
    let hw = 0.5 * p[2].abs();
    p[0] * hw * hw / ((energy - p[1]).powi(2) + hw * hw)
        + p[3] * (0.5 + ((energy - p[4]) / p[5].abs()).atan() / PI)
        + p[6]
}

/// Lorentzian + arctangent step + constant.
pub fn fit_xas_lineshape(energies: &[f64], intensity: &[f64]) -> Result<XasDecomposition> {
    let n = energies.len();
    if n != intensity.len() || n < 8 {
        return Err(Error::Input("XAS curve needs matching columns of >= 8 points".into()));
    }
    let (ymin, ymax) = intensity
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let span = energies[n - 1] - energies[0];
    let mean = intensity.iter().sum::<f64>() / n as f64;
    if ymax - ymin <= 1e-9 * ymax.abs().max(ymin.abs()).max(1e-300) {
        return Ok(XasDecomposition {
            lorentzian: ResonanceLine {
                omega0: 0.5 * (energies[0] + energies[n - 1]),
                gamma: span,
                f0: 0.0,
                dipole_sq: 0.0,
            },
            continuum: ArctanStep {
                center: energies[0],
                width: span,
                amplitude: 0.0,
            },
            background: mean,
            residual_norm: 0.0,
            iterations: 0,
            degenerate: true,
        });
    }

    let tail = (n / 10).max(1);
    let b0 = intensity[..tail].iter().sum::<f64>() / tail as f64;
    let s0 = intensity[n - tail..].iter().sum::<f64>() / tail as f64 - b0;
    let ipk = (0..n).max_by(|&i, &j| intensity[i].total_cmp(&intensity[j])).unwrap();
    let w0 = energies[ipk];
    let a0 = (intensity[ipk] - b0 - 0.5 * s0).max(0.0);
    let half = b0 + 0.5 * s0 + 0.5 * a0;
    let mut lo = ipk;
    while lo > 0 && intensity[lo] > half {
        lo -= 1;
    }
    let mut hi = ipk;
    while hi < n - 1 && intensity[hi] > half {
        hi += 1;
    }
    let g0 = (energies[hi] - energies[lo]).max(span / n as f64 * 2.0);
    let p0 = [a0, w0, g0, s0, w0 + 0.5 * g0, 0.5 * g0, b0];

    let residual = |p: &[f64]| -> Vec<f64> {
        energies
            .iter()
            .zip(intensity)
            .map(|(&e, &y)| xas_model(p, e) - y)
            .collect()
    };
    let out = levenberg_marquardt(residual, &p0, LmOptions::default())?;
    let p = &out.params;
    let degenerate = p[0].abs() <= 1e-3 * (ymax - ymin);
    Ok(XasDecomposition {
        lorentzian: ResonanceLine {
            omega0: p[1],
            gamma: p[2].abs(),
            f0: p[0],
            dipole_sq: 0.0,
        },
        continuum: ArctanStep {
            center: p[4],
            width: p[5].abs(),
            amplitude: p[3],
        },
        background: p[6],
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        degenerate,
    })
}
