use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::resolvent::extension_radius;

/// `A(x) = 6x(1 + x) / ((1 + x)^3 - 3(5x - 1))`, evaluated as written.
pub fn amplitude_a(x: f64) -> f64 {
    let denom = (1.0 + x).powi(3) - 3.0 * (5.0 * x - 1.0);
    6.0 * x * (1.0 + x) / denom
}

/// [`amplitude_a`] restricted to the regime where it is a valid radius in `(0, 1)`.
pub fn amplitude_checked(x: f64) -> Result<f64, GeometryError> {
    let denom = (1.0 + x).powi(3) - 3.0 * (5.0 * x - 1.0);
    let value = amplitude_a(x);
    if denom <= 0.0 || !(value > 0.0 && value < 1.0) {
        return Err(GeometryError::PoleOrNegative { x, value });
    }
    Ok(value)
}

/// Largest real root of `A(x) = 1` via the trigonometric solution of
/// the cubic `x^3 - 3x^2 - 18x + 4 = 0`.
pub fn r0_closed_form() -> f64 {
    1.0 + 2.0 * 7f64.sqrt() * ((3.0 * 31f64.sqrt() / 8.0).atan() / 3.0).cos()
}

/// Same root by bisection on the cubic over `[5, 7]`.
pub fn r0_by_bisection() -> f64 {
    let cubic = |x: f64| ((x - 3.0) * x - 18.0) * x + 4.0;
    let (mut lo, mut hi) = (5.0_f64, 7.0_f64);
    debug_assert!(cubic(lo) < 0.0 && cubic(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cubic(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Threshold `r0 ~ 5.92434` above which `A < 1`.
pub fn r0() -> f64 {
    let closed = r0_closed_form();
    debug_assert!((closed - r0_by_bisection()).abs() <= 1e-10);
    closed
}

/// Order bounds implied by `A(x)` for `x = r Re q > r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalOrders {
    pub x: f64,
    pub amplitude: f64,
    /// Starlikeness order `1 / (1 + A)`.
    pub alpha_r: f64,
    /// Strong starlikeness order `(2/pi) asin A`.
    pub beta_r: f64,
    pub theta: f64,
    /// Spirallikeness order for `theta`; present only when `x > 6`.
    pub alpha_r_theta: Option<f64>,
    /// Squeezing exponent `(1 - A) / (1 + A)`.
    pub gamma_r: f64,
    /// Quasiconformal dilatation bound.
    pub k_qc: f64,
}

pub fn theoretical_orders(x: f64, theta: f64) -> Result<TheoreticalOrders, GeometryError> {
    let threshold = r0();
    if !(x > threshold) {
        return Err(GeometryError::BelowThreshold { x, threshold });
    }
    let a = amplitude_checked(x)?;
    let alpha_r_theta = if x > 6.0 {
        let bound = (6.0 / x).acos();
        if theta.abs() > bound {
            return Err(GeometryError::ThetaOutOfRange { theta, bound });
        }
        let ct = theta.cos();
        Some((ct - a) / ((1.0 - a * a) * ct))
    } else {
        None
    };
    Ok(TheoreticalOrders {
        x,
        amplitude: a,
        alpha_r: 1.0 / (1.0 + a),
        beta_r: 2.0 / PI * a.asin(),
        theta,
        alpha_r_theta,
        gamma_r: (1.0 - a) / (1.0 + a),
        k_qc: a,
    })
}

/// Univalence, distortion and covering radii for inverses of the class
/// `F(0) = 0, F'(0) = beta, Re((F(z)/z - beta) / alpha) > -1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRadii {
    pub m: f64,
    /// Radius of univalence.
    pub r: f64,
    /// `G(D_R)` lies in `D_{R1}`.
    pub r1: f64,
    /// `G(D_R)` covers `D_{R2}` (hyperbolic convexity bound).
    pub r2: f64,
    /// Weaker covering radius from the second-coefficient bound.
    pub r_bieberbach: f64,
}

pub fn class_radii(alpha: Complex64, beta: Complex64) -> Result<ClassRadii, GeometryError> {
    if !((alpha * beta.conj()).re > 0.0) {
        return Err(GeometryError::BadClass { alpha, beta });
    }
    let ratio = (beta / alpha).re;
    let m = 1.0 - ratio;
    let abs_alpha = alpha.norm();
    let (r, r1) = if ratio > 0.75 {
        (abs_alpha * (0.5 - m), 1.0)
    } else {
        let s = m.sqrt();
        (abs_alpha * (1.0 - s) * (1.0 - s), 1.0 / s - 1.0)
    };
    let abs_beta = beta.norm();
    let r2 = r * r1 / (r1 * abs_beta + (r1 * r1 * abs_beta * abs_beta - r * r).sqrt());
    let r_bieberbach = abs_beta * r / (abs_beta * abs_beta + beta.re.abs() * r);
    Ok(ClassRadii {
        m,
        r,
        r1,
        r2,
        r_bieberbach,
    })
}

/// Radii for the resolvent `G_r` of a generator with `f'(0) = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventRadii {
    pub r: f64,
    pub q: Complex64,
    pub x: f64,
    /// Extension radius; `None` when `x <= 2`, as are `rho1..rho3`.
    pub rho: Option<f64>,
    pub rho1: Option<f64>,
    /// Covering radius of `G_r(D_rho)` as printed in closed form.
    pub rho2: Option<f64>,
    /// Covering radius from the general class formula at `(2x, 1 + rq)`.
    pub rho2_general: Option<f64>,
    pub rho3: Option<f64>,
    /// Covering radius of `G_r(D)`, defined for every `r > 0`.
    pub rho4: f64,
}

pub fn resolvent_radii(r: f64, q: Complex64) -> Result<ResolventRadii, GeometryError> {
    if !(q.re > 0.0) || !(r > 0.0) {
        return Err(GeometryError::BadClass {
            alpha: Complex64::new(2.0 * r * q.re, 0.0),
            beta: 1.0 + r * q,
        });
    }
    let x = r * q.re;
    let one_rq = (1.0 + r * q).norm();
    let rho4 = 1.0 / (one_rq + (one_rq * one_rq - 1.0).sqrt());
    let mut out = ResolventRadii {
        r,
        q,
        x,
        rho: None,
        rho1: None,
        rho2: None,
        rho2_general: None,
        rho3: None,
        rho4,
    };
    if let Ok(rho) = extension_radius(x) {
        out.rho = Some(rho);
        out.rho1 = Some((2.0 * x / (x - 1.0)).sqrt() - 1.0);
        out.rho2 = Some(rho / (one_rq + (2.0 + x + r * r * q.norm_sqr()).sqrt()));
        out.rho2_general = Some(class_radii(Complex64::new(2.0 * x, 0.0), 1.0 + r * q)?.r2);
        out.rho3 = Some(3.0 / (1.0 + x));
    }
    Ok(out)
}

impl ResolventRadii {
    /// Every radius that needs `x > 2`, or `BelowThreshold`.
    pub fn extended(&self) -> Result<(f64, f64, f64, f64), GeometryError> {
        match (self.rho, self.rho1, self.rho2, self.rho3) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok((a, b, c, d)),
            _ => Err(GeometryError::BelowThreshold {
                x: self.x,
                threshold: 2.0,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn amplitude_values() {
        assert_eq!(amplitude_a(6.0), 252.0 / 256.0);
        assert!((amplitude_a(10.0) - 660.0 / 1184.0).abs() < 1e-16);
        assert!((amplitude_a(10.0) - 0.5574324).abs() < 1e-7);
        assert!(amplitude_checked(10.0).is_ok());
        assert!(matches!(
            amplitude_checked(1.0),
            Err(GeometryError::PoleOrNegative { .. })
        ));
        assert!(amplitude_checked(5.0).is_err());
    }

    #[test]
    fn r0_two_routes_agree() {
        let closed = r0_closed_form();
        let bisect = r0_by_bisection();
        assert!((closed - bisect).abs() <= 1e-10);
        assert!((closed - 5.92434).abs() <= 5e-5);
        assert!((amplitude_a(r0()) - 1.0).abs() <= 1e-10);
        let after = amplitude_a(r0() + 1.0);
        assert!(after > 0.0 && after < 1.0);
    }

    #[test]
    fn amplitude_decreasing_past_r0() {
        let mut prev = amplitude_a(r0() + 1e-6);
        for k in 1..2000 {
            let x = r0() + 0.05 * k as f64;
            let a = amplitude_a(x);
            assert!(a < prev && a > 0.0);
            prev = a;
        }
    }

    #[test]
    fn orders_at_ten() {
        let o = theoretical_orders(10.0, 0.0).unwrap();
        let a = 660.0 / 1184.0;
        assert!((o.k_qc - a).abs() < 1e-15);
        assert!((o.alpha_r - 1184.0 / 1844.0).abs() < 1e-15);
        assert!((o.beta_r - 0.376_426_873_964_323_8).abs() < 1e-14);
        assert!((o.gamma_r - 524.0 / 1844.0).abs() < 1e-15);
        assert!((o.alpha_r - 0.6420826).abs() < 5e-6);
        assert!((o.beta_r - 0.376437).abs() < 2e-5);
        assert!((o.gamma_r - 0.2841660).abs() < 5e-6);
        // theta = 0 spirallike order collapses to the starlike order
        assert!((o.alpha_r_theta.unwrap() - o.alpha_r).abs() < 1e-15);
    }

    #[test]
    fn orders_at_six_and_limits() {
        let o = theoretical_orders(6.0, 0.0).unwrap();
        assert!((o.gamma_r - 0.015625 / 1.984375).abs() < 1e-15);
        assert!((o.gamma_r - 0.0078740).abs() < 1e-7);
        assert!(o.alpha_r_theta.is_none());
        let o = theoretical_orders(1e6, 0.0).unwrap();
        assert!((o.alpha_r - 1.0).abs() < 1e-4);
        assert!(o.beta_r.abs() < 1e-4);
    }

    #[test]
    fn orders_errors() {
        assert!(matches!(
            theoretical_orders(5.0, 0.0),
            Err(GeometryError::BelowThreshold { .. })
        ));
        assert!(matches!(
            theoretical_orders(10.0, 1.0),
            Err(GeometryError::ThetaOutOfRange { .. })
        ));
        let bound = (0.6f64).acos();
        assert!(theoretical_orders(10.0, bound).is_ok());
    }

    #[test]
    fn unit_class() {
        let rad = class_radii(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(rad.m, 0.0);
        assert!((rad.r - 0.5).abs() < 1e-12);
        assert!((rad.r1 - 1.0).abs() < 1e-12);
        assert!((rad.r2 - 1.0 / (2.0 + 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn class_at_x8() {
        let rad = class_radii(c(16.0, 0.0), c(9.0, 0.0)).unwrap();
        assert!((rad.m - 7.0 / 16.0).abs() < 1e-15);
        assert!((rad.r - (23.0 - 8.0 * 7f64.sqrt())).abs() < 1e-14 && (rad.r - 1.8339887).abs() < 2e-6);
        assert!((rad.r1 - 0.5118578).abs() < 1e-7);
        assert!((rad.r2 - 0.106281).abs() < 1e-6);
    }

    #[test]
    fn bad_class() {
        assert!(matches!(
            class_radii(c(0.0, 2.0), c(0.0, -1.0)),
            Err(GeometryError::BadClass { .. })
        ));
    }

    #[test]
    fn resolvent_radii_r8() {
        let rad = resolvent_radii(8.0, c(1.0, 0.0)).unwrap();
        let (rho, rho1, rho2, rho3) = rad.extended().unwrap();
        assert!((rho - (23.0 - 8.0 * 7f64.sqrt())).abs() < 1e-14 && (rho - 1.8339887).abs() < 2e-6);
        assert!((rho1 - 0.5118578).abs() < 1e-7);
        assert!((rho2 - rho / (9.0 + 74f64.sqrt())).abs() < 1e-15);
        assert!((rho2 - 0.1041902).abs() < 1e-7);
        assert!((rho3 - 1.0 / 3.0).abs() < 1e-15);
        assert!((rad.rho4 - 1.0 / (9.0 + 80f64.sqrt())).abs() < 1e-15);
        assert!(rad.rho2_general.unwrap() > rho2);
    }

    #[test]
    fn resolvent_radii_below_threshold() {
        let rad = resolvent_radii(1.0, c(1.0, 0.0)).unwrap();
        assert!(rad.rho.is_none() && rad.rho3.is_none());
        assert!((rad.rho4 - 0.2679492).abs() < 1e-7);
        assert!((rad.rho4 - 1.0 / (2.0 + 3f64.sqrt())).abs() < 1e-15);
        assert!(rad.extended().is_err());
        let rad = resolvent_radii(9.0, c(1.0, 0.0)).unwrap();
        assert!((rad.rho3.unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn resolvent_and_class_radii_agree() {
        for &(r, q) in &[(8.0, c(1.0, 0.0)), (3.0, c(1.2, -0.7)), (40.0, c(0.3, 2.0))] {
            let rad = resolvent_radii(r, q).unwrap();
            let x = r * q.re;
            let cls = class_radii(c(2.0 * x, 0.0), 1.0 + r * q).unwrap();
            assert!((rad.rho.unwrap() - cls.r).abs() <= 1e-14);
            assert!((rad.rho1.unwrap() - cls.r1).abs() <= 1e-14);
        }
    }
}
