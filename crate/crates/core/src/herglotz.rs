//! Herglotz functions, generators `f(z) = z p(z)` and reference starlike maps.
//!
//! A Herglotz function is stored as a finite atomic boundary measure plus an
//! imaginary constant:
//!
//! ```text
//! p(z) = sum_k mu_k (1 + z conj(zeta_k)) / (1 - z conj(zeta_k)) + i gamma
//! ```
//!
//! so `Re p > 0` on the open disk and `p(0) = sum_k mu_k + i gamma`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HerglotzError {
    #[error("boundary measure is empty or has zero total mass")]
    EmptyMeasure,
    #[error("atom {index} has negative mass {mass}")]
    NegativeMass { index: usize, mass: f64 },
    #[error("atom {index} has a non-finite angle or mass")]
    NonFinite { index: usize },
    #[error("point {z} lies outside the open unit disk")]
    OutsideDisk { z: Complex64 },
    #[error("Re q must be positive, got q = {q}")]
    BadQ { q: Complex64 },
    #[error("omega(z) = c z^m needs |c| <= 1 and m >= 1, got c = {c}, m = {m}")]
    BadOmega { c: Complex64, m: u32 },
    #[error("starlikeness order must lie in (0, 1), got {order}")]
    BadOrder { order: f64 },
    #[error("reference masses must be nonnegative and sum to 1, got sum {sum}")]
    NotProbability { sum: f64 },
}

/// Point mass on the unit circle at `e^{i angle}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAtom {
    pub angle: f64,
    pub mass: f64,
}

impl BoundaryAtom {
    pub fn new(angle: f64, mass: f64) -> Self {
        Self { angle, mass }
    }

    /// `conj(zeta)` for `zeta = e^{i angle}`.
    fn conj_point(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.angle)
    }
}

fn reduce_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

#[inline]
pub(crate) fn check_in_disk(z: Complex64) -> Result<(), HerglotzError> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(HerglotzError::OutsideDisk { z })
    }
}

/// Carathéodory-class function given by Riesz–Herglotz data.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzFn {
    atoms: Vec<BoundaryAtom>,
    gamma: f64,
    conj_points: Vec<Complex64>,
}

impl HerglotzFn {
    pub fn new(atoms: Vec<BoundaryAtom>, gamma: f64) -> Result<Self, HerglotzError> {
        if atoms.is_empty() {
            return Err(HerglotzError::EmptyMeasure);
        }
        let mut reduced = Vec::with_capacity(atoms.len());
        for (index, atom) in atoms.iter().enumerate() {
            if !atom.angle.is_finite() || !atom.mass.is_finite() {
                return Err(HerglotzError::NonFinite { index });
            }
            if atom.mass < 0.0 {
                return Err(HerglotzError::NegativeMass {
                    index,
                    mass: atom.mass,
                });
            }
            reduced.push(BoundaryAtom::new(reduce_angle(atom.angle), atom.mass));
        }
        let total: f64 = reduced.iter().map(|a| a.mass).sum();
        if total <= 0.0 {
            return Err(HerglotzError::EmptyMeasure);
        }
        let conj_points = reduced.iter().map(BoundaryAtom::conj_point).collect();
        Ok(Self {
            atoms: reduced,
            gamma,
            conj_points,
        })
    }

    pub fn atoms(&self) -> &[BoundaryAtom] {
        &self.atoms
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `p(0) = total mass + i gamma`.
    pub fn q(&self) -> Complex64 {
        Complex64::new(self.total_mass(), self.gamma)
    }

    /// Value and derivative of `p` at `z`, `|z| < 1`.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), HerglotzError> {
        check_in_disk(z)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut value = Complex64::new(0.0, self.gamma);
        let mut deriv = Complex64::new(0.0, 0.0);
        for (atom, &cz) in self.atoms.iter().zip(&self.conj_points) {
            let u = z * cz;
            let inv = 1.0 / (1.0 - u);
            value += atom.mass * (1.0 + u) * inv;
            deriv += atom.mass * 2.0 * cz * inv * inv;
        }
        (value, deriv)
    }

    /// The function `z -> p(e^{i theta} z)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| BoundaryAtom::new(a.angle - theta, a.mass))
            .collect();
        Self::new(atoms, self.gamma).expect("rotation preserves a valid measure")
    }
}

/// Infinitesimal generator `f(z) = z p(z)` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Herglotz(HerglotzFn),
    /// `p(z) = (q + conj(q) w(z)) / (1 - w(z))` with `w(z) = c z^m`.
    Omega { q: Complex64, c: Complex64, m: u32 },
}

impl Generator {
    pub fn herglotz(atoms: Vec<BoundaryAtom>, gamma: f64) -> Result<Self, HerglotzError> {
        HerglotzFn::new(atoms, gamma).map(Self::Herglotz)
    }

    pub fn omega(q: Complex64, c: Complex64, m: u32) -> Result<Self, HerglotzError> {
        if !(q.re > 0.0) || !q.im.is_finite() || !q.re.is_finite() {
            return Err(HerglotzError::BadQ { q });
        }
        if m == 0 || !(c.norm() <= 1.0) {
            return Err(HerglotzError::BadOmega { c, m });
        }
        Ok(Self::Omega { q, c, m })
    }

    /// The linear generator `f(z) = q z`.
    pub fn linear(q: Complex64) -> Result<Self, HerglotzError> {
        Self::omega(q, Complex64::new(0.0, 0.0), 1)
    }

    /// `f(z) = z (1 + z) / (1 - z)`, the point mass at `zeta = 1`.
    pub fn koebe() -> Self {
        Self::Omega {
            q: Complex64::new(1.0, 0.0),
            c: Complex64::new(1.0, 0.0),
            m: 1,
        }
    }

    /// `q = f'(0) = p(0)`.
    pub fn q(&self) -> Complex64 {
        match self {
            Self::Herglotz(p) => p.q(),
            Self::Omega { q, .. } => *q,
        }
    }

    /// Value and derivative of `p = f(z)/z`.
    pub fn eval_p(&self, z: Complex64) -> Result<(Complex64, Complex64), HerglotzError> {
        check_in_disk(z)?;
        Ok(self.eval_p_unchecked(z))
    }

    pub(crate) fn eval_p_unchecked(&self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            Self::Herglotz(p) => p.eval_unchecked(z),
            Self::Omega { q, c, m } => {
                let m = *m as i32;
                let zm1 = if m == 1 { Complex64::new(1.0, 0.0) } else { z.powi(m - 1) };
                let omega = c * zm1 * z;
                let domega = c * f64::from(m) * zm1;
                let inv = 1.0 / (1.0 - omega);
                let value = (q + q.conj() * omega) * inv;
                let deriv = 2.0 * q.re * domega * inv * inv;
                (value, deriv)
            }
        }
    }

    /// Value and derivative of `f(z) = z p(z)`.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), HerglotzError> {
        check_in_disk(z)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: Complex64) -> (Complex64, Complex64) {
        let (p, dp) = self.eval_p_unchecked(z);
        (z * p, p + z * dp)
    }

    /// The conjugated generator `z -> e^{-i theta} f(e^{i theta} z)`.
    pub fn rotated(&self, theta: f64) -> Self {
        match self {
            Self::Herglotz(p) => Self::Herglotz(p.rotated(theta)),
            Self::Omega { q, c, m } => Self::Omega {
                q: *q,
                c: c * Complex64::from_polar(1.0, f64::from(*m) * theta),
                m: *m,
            },
        }
    }

    pub fn to_spec(&self) -> GeneratorSpec {
        match self {
            Self::Herglotz(p) => GeneratorSpec::Herglotz {
                atoms: p.atoms().to_vec(),
                gamma: p.gamma(),
            },
            Self::Omega { q, c, m } => GeneratorSpec::Omega {
                q: (*q).into(),
                c: (*c).into(),
                m: *m,
            },
        }
    }
}

/// Complex number as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// JSON form of a generator, as read by the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Herglotz {
        atoms: Vec<BoundaryAtom>,
        #[serde(default)]
        gamma: f64,
    },
    Omega {
        q: ComplexJson,
        c: ComplexJson,
        m: u32,
    },
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<Generator, HerglotzError> {
        match self {
            Self::Herglotz { atoms, gamma } => Generator::herglotz(atoms.clone(), *gamma),
            Self::Omega { q, c, m } => Generator::omega((*q).into(), (*c).into(), *m),
        }
    }
}

/// Normalized starlike map of order `alpha` built from a probability measure:
/// `h(z) = z exp(-2(1 - alpha) sum_k nu_k log(1 - z conj(zeta_k)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    order: f64,
    atoms: Vec<(f64, f64)>,
    conj_points: Vec<Complex64>,
}

impl ReferenceMap {
    pub fn new(order: f64, atoms: Vec<(f64, f64)>) -> Result<Self, HerglotzError> {
        if !(order > 0.0 && order < 1.0) {
            return Err(HerglotzError::BadOrder { order });
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.is_empty()
            || atoms.iter().any(|a| !(a.1 >= 0.0) || !a.0.is_finite())
            || (sum - 1.0).abs() > 1e-12
        {
            return Err(HerglotzError::NotProbability { sum });
        }
        let conj_points = atoms
            .iter()
            .map(|&(angle, _)| Complex64::from_polar(1.0, -angle))
            .collect();
        Ok(Self {
            order,
            atoms,
            conj_points,
        })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// `h(z)` and `h'(z)`.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), HerglotzError> {
        check_in_disk(z)?;
        let scale = 2.0 * (1.0 - self.order);
        let mut log_sum = Complex64::new(0.0, 0.0);
        let mut log_deriv = Complex64::new(0.0, 0.0);
        for (&(_, mass), &cz) in self.atoms.iter().zip(&self.conj_points) {
            let base = 1.0 - z * cz;
            log_sum += mass * base.ln();
            log_deriv += mass * cz / base;
        }
        let factor = (-scale * log_sum).exp();
        let h = z * factor;
        // h'/h = 1/z + scale * sum nu conj(zeta) / (1 - z conj(zeta))
        let dh = factor * (1.0 + scale * z * log_deriv);
        Ok((h, dh))
    }
}
