//! Adaptive Dormand–Prince 5(4) integration of autonomous complex ODEs
//! `du/ds = F(u)` over a real parameter `s`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError<E> {
    #[error("step size underflow at s = {s} (h = {h})")]
    StepUnderflow { s: f64, h: f64 },
    #[error("right-hand side failed at s = {s}: {source}")]
    Rhs { s: f64, source: E },
    #[error("integration stopped at s = {s}: {source}")]
    Stopped { s: f64, source: E },
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Step {
    y: Complex64,
    k7: Complex64,
    err: Complex64,
}

fn dp_step<F, E>(rhs: &F, y: Complex64, k1: Complex64, h: f64) -> Result<Step, E>
where
    F: Fn(Complex64) -> Result<Complex64, E>,
{
    let k2 = rhs(y + h * (A21 * k1))?;
    let k3 = rhs(y + h * (A31 * k1 + A32 * k2))?;
    let k4 = rhs(y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = rhs(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = rhs(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = rhs(y_new)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Ok(Step { y: y_new, k7, err })
}

/// Integrates `du/ds = rhs(u)` from `u(0) = y0` to `s_end >= 0`.
///
/// `on_step(s, u)` is called after every accepted step (and once at `s = 0`);
/// returning an error stops the integration. Right-hand side failures inside
/// a trial step reject the step and shrink it; if that drives the step below
/// `h_min` the failure is returned.
pub fn integrate<F, C, E>(
    rhs: F,
    y0: Complex64,
    s_end: f64,
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<Complex64, IntegrationError<E>>
where
    F: Fn(Complex64) -> Result<Complex64, E>,
    C: FnMut(f64, Complex64) -> Result<(), E>,
{
    on_step(0.0, y0).map_err(|source| IntegrationError::Stopped { s: 0.0, source })?;
    if s_end <= 0.0 {
        return Ok(y0);
    }
    let mut k1 = rhs(y0).map_err(|source| IntegrationError::Rhs { s: 0.0, source })?;
    let scale0 = opts.abs_tol + opts.rel_tol * y0.norm();
    let d0 = y0.norm() / scale0;
    let d1 = k1.norm() / scale0;
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(s_end).max(opts.h_min);

    let mut s = 0.0_f64;
    let mut y = y0;
    let mut steps = 0usize;
    while s < s_end {
        if steps >= opts.max_steps {
            return Err(IntegrationError::StepUnderflow { s, h });
        }
        steps += 1;
        let last = s + h >= s_end;
        let h_try = if last { s_end - s } else { h };
        match dp_step(&rhs, y, k1, h_try) {
            Ok(step) => {
                let scale = opts.abs_tol + opts.rel_tol * y.norm().max(step.y.norm());
                let err = step.err.norm() / scale;
                if err <= 1.0 {
                    s = if last { s_end } else { s + h_try };
                    y = step.y;
                    k1 = step.k7;
                    on_step(s, y).map_err(|source| IntegrationError::Stopped { s, source })?;
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.8 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !last {
                        h = h_try * factor;
                    }
                } else {
                    h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    if h < opts.h_min {
                        return Err(IntegrationError::StepUnderflow { s, h });
                    }
                }
            }
            Err(source) => {
                h = 0.25 * h_try;
                if h < opts.h_min {
                    return Err(IntegrationError::Rhs { s, source });
                }
            }
        }
    }
    Ok(y)
}
