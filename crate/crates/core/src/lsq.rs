//! Small least-squares and 1D minimisation helpers.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost change that counts as converged.
    pub cost_tolerance: f64,
    /// Relative parameter step that counts as converged.
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            cost_tolerance: 1e-14,
            step_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &F, p: &[f64], r0: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-6);
        q[k] = p[k] + h;
        let up = f(&q);
        q[k] = p[k] - h;
        let down = f(&q);
        q[k] = p[k];
        for i in 0..r0.len() {
            jac[(i, k)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

/// Levenberg-Marquardt with a central-difference Jacobian.
///
/// Fails with [`Error::FitFailure`] carrying the best parameters seen when
/// the iteration budget runs out.
pub fn levenberg_marquardt<F>(f: F, p0: &[f64], opts: LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = p0.to_vec();
    let mut r = f(&p);
    let mut c = cost(&r);
    if !c.is_finite() {
        return Err(Error::Input("residual is not finite at the starting point".into()));
    }
    let mut lambda = 1e-3;
    for iter in 1..=opts.max_iterations {
        let jac = jacobian(&f, &p, &r);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..p.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match a.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = f(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= opts.step_tolerance * (v.abs() + opts.step_tolerance));
                let small_cost = c - ct <= opts.cost_tolerance * c.max(1e-300);
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small_step || small_cost || c == 0.0 {
                    return Ok(LmOutcome {
                        params: p,
                        residual_norm: c.sqrt(),
                        iterations: iter,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: local minimum to working precision
            return Ok(LmOutcome {
                params: p,
                residual_norm: c.sqrt(),
                iterations: iter,
            });
        }
    }
    Err(Error::FitFailure {
        iterations: opts.max_iterations,
        best: p,
        residual: c.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]` down to an
/// interval of width `tol`.
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Minimum
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 500 {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum { x, value, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * (-1.3 * x).exp() + 0.2).collect();
        let out = levenberg_marquardt(
            |p| {
                xs.iter()
                    .zip(&ys)
                    .map(|(x, y)| p[0] * (-p[1] * x).exp() + p[2] - y)
                    .collect()
            },
            &[1.0, 0.5, 0.0],
            LmOptions::default(),
        )
        .unwrap();
        assert!((out.params[0] - 2.5).abs() < 1e-8);
        assert!((out.params[1] - 1.3).abs() < 1e-8);
        assert!((out.params[2] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_best() {
        let opts = LmOptions {
            max_iterations: 1,
            cost_tolerance: 0.0,
            step_tolerance: 0.0,
        };
        let err = levenberg_marquardt(|p| vec![p[0].exp() - 3.0, p[0] - 10.0], &[0.0], opts);
        match err {
            Err(Error::FitFailure { best, .. }) => assert_eq!(best.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let m = golden_section(|x| (x - 0.7).powi(2) + 1.0, 0.0, 2.0, 1e-10);
        assert!((m.x - 0.7).abs() < 1e-7);
        assert!((m.value - 1.0).abs() < 1e-15);
    }
}
