//! Winding numbers of closed parametrized curves by angle unwrapping.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Curves closer than this to a probe are rejected.
pub const AMBIGUITY_DISTANCE: f64 = 1e-9;
/// Largest allowed deviation of the raw winding sum from an integer.
pub const INTEGER_DEFECT: f64 = 1e-6;
const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub probe: Complex64,
    /// Total unwrapped angle divided by `2 pi`.
    pub raw: f64,
    pub winding: i64,
    /// Smallest sampled distance from the curve to the probe.
    pub min_distance: f64,
}

/// Winding numbers of the closed curve `theta -> curve(theta)`, `theta in [0, 2 pi)`,
/// about each probe. The curve is sampled at `samples` uniform parameters and
/// segments whose argument increment exceeds `pi/2` are bisected.
pub fn winding_numbers<F>(
    curve: F,
    samples: usize,
    probes: &[Complex64],
) -> Result<Vec<Winding>, GeometryError>
where
    F: Fn(f64) -> Result<Complex64, GeometryError> + Sync,
{
    assert!(samples >= 3, "need at least three curve samples");
    let params: Vec<f64> = (0..=samples).map(|k| TAU * k as f64 / samples as f64).collect();
    let mut points = params[..samples]
        .par_iter()
        .map(|&t| curve(t))
        .collect::<Result<Vec<_>, _>>()?;
    points.push(points[0]);

    probes
        .par_iter()
        .map(|&probe| {
            let mut total = 0.0;
            let mut min_distance = f64::INFINITY;
            for k in 0..samples {
                let (angle, dist) = segment_angle(
                    &curve,
                    probe,
                    (params[k], points[k]),
                    (params[k + 1], points[k + 1]),
                    0,
                )?;
                total += angle;
                min_distance = min_distance.min(dist);
            }
            if min_distance < AMBIGUITY_DISTANCE {
                return Err(GeometryError::WindingAmbiguous {
                    probe,
                    distance: min_distance,
                });
            }
            let raw = total / TAU;
            let winding = raw.round();
            if (raw - winding).abs() > INTEGER_DEFECT {
                return Err(GeometryError::WindingAmbiguous {
                    probe,
                    distance: min_distance,
                });
            }
            Ok(Winding {
                probe,
                raw,
                winding: winding as i64,
                min_distance,
            })
        })
        .collect()
}

fn segment_angle<F>(
    curve: &F,
    probe: Complex64,
    (ta, a): (f64, Complex64),
    (tb, b): (f64, Complex64),
    depth: u32,
) -> Result<(f64, f64), GeometryError>
where
    F: Fn(f64) -> Result<Complex64, GeometryError>,
{
    let da = a - probe;
    let db = b - probe;
    let dist = da.norm().min(db.norm());
    if dist < AMBIGUITY_DISTANCE {
        return Err(GeometryError::WindingAmbiguous {
            probe,
            distance: dist,
        });
    }
    let angle = (db / da).arg();
    if angle.abs() <= FRAC_PI_2 || depth >= MAX_DEPTH {
        return Ok((angle, dist));
    }
    let tm = 0.5 * (ta + tb);
    let m = curve(tm)?;
    let (a1, d1) = segment_angle(curve, probe, (ta, a), (tm, m), depth + 1)?;
    let (a2, d2) = segment_angle(curve, probe, (tm, m), (tb, b), depth + 1)?;
    Ok((a1 + a2, d1.min(d2)))
}

/// `count` probe points evenly spaced on the circle of the given radius.
pub fn circle_probes(radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, TAU * k as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_circle() {
        let probes = [c(0.0, 0.0), c(0.5, 0.5), c(2.0, 0.0)];
        let w = winding_numbers(|t| Ok(Complex64::from_polar(1.0, t)), 64, &probes).unwrap();
        assert_eq!(w.iter().map(|w| w.winding).collect::<Vec<_>>(), vec![1, 1, 0]);
        assert!(w.iter().all(|w| (w.raw - w.raw.round()).abs() < 1e-12));
    }

    #[test]
    fn double_loop_coarse_sampling_is_refined() {
        // only 4 samples of a doubly traversed circle: refinement must recover 2
        let w = winding_numbers(|t| Ok(Complex64::from_polar(1.0, 2.0 * t)), 4, &[c(0.1, 0.0)])
            .unwrap();
        assert_eq!(w[0].winding, 2);
    }

    #[test]
    fn reversed_orientation() {
        let w = winding_numbers(|t| Ok(Complex64::from_polar(1.0, -t)), 32, &[c(0.0, 0.0)])
            .unwrap();
        assert_eq!(w[0].winding, -1);
    }

    #[test]
    fn probe_on_curve_is_ambiguous() {
        let err = winding_numbers(|t| Ok(Complex64::from_polar(1.0, t)), 8, &[c(1.0, 0.0)]);
        assert!(matches!(err, Err(GeometryError::WindingAmbiguous { .. })));
    }

    #[test]
    fn probes_on_circle() {
        let p = circle_probes(2.0, 4);
        assert_eq!(p.len(), 4);
        assert!((p[1] - c(0.0, 2.0)).norm() < 1e-15);
    }
}
