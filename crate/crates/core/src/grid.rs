//! Polar sampling grids.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Polar grid with radii `max_radius * k / radius_count` for `k = 1..=radius_count`
/// and `angle_count` uniformly spaced angles starting at zero. The origin is never
/// a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub radius_count: usize,
    pub angle_count: usize,
    pub max_radius: f64,
}

impl Grid {
    pub const DEFAULT_RADII: usize = 64;
    pub const DEFAULT_ANGLES: usize = 256;

    pub fn new(radius_count: usize, angle_count: usize, max_radius: f64) -> Self {
        assert!(radius_count > 0 && angle_count > 0, "grid must be nonempty");
        assert!(max_radius > 0.0 && max_radius.is_finite(), "grid radius must be positive");
        Self {
            radius_count,
            angle_count,
            max_radius,
        }
    }

    /// Default 64 x 256 grid reaching `0.999 * bound`.
    pub fn default_for(bound: f64) -> Self {
        Self::new(Self::DEFAULT_RADII, Self::DEFAULT_ANGLES, 0.999 * bound)
    }

    pub fn len(&self) -> usize {
        self.radius_count * self.angle_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.max_radius * (k + 1) as f64 / self.radius_count as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.angle_count as f64
    }

    /// Node `index` in row-major (radius, then angle) order.
    pub fn node(&self, index: usize) -> Complex64 {
        let k = index / self.angle_count;
        let j = index % self.angle_count;
        Complex64::from_polar(self.radius(k), self.angle(j))
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Nodes on the outermost circle only.
    pub fn outer_circle(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.angle_count).map(move |j| Complex64::from_polar(self.max_radius, self.angle(j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let g = Grid::new(4, 8, 0.8);
        assert_eq!(g.len(), 32);
        assert!((g.node(0) - Complex64::new(0.2, 0.0)).norm() < 1e-15);
        assert!((g.node(8) - Complex64::new(0.4, 0.0)).norm() < 1e-15);
        assert!((g.node(31).norm() - 0.8).abs() < 1e-15);
        assert!(g.nodes().all(|z| z.norm() > 0.0 && z.norm() <= 0.8 + 1e-15));
    }

    #[test]
    fn default_grid() {
        let g = Grid::default_for(1.0);
        assert_eq!((g.radius_count, g.angle_count), (64, 256));
        assert!((g.max_radius - 0.999).abs() < 1e-15);
    }
}
