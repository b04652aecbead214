//! Seeded sampling of certified input domains.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). A uniform double is
//! `(next_u64() >> 11) · 2^−53`. For seed 0 the first three outputs of
//! `next_u64` are 0x53175d61490b23df, 0x61da6f3dc380d507, 0x5c0fdf91ec9a7bfc.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub struct SampleRng(Xoshiro256PlusPlus);

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform on the disk `|z| ≤ r`.
    pub fn disk(&mut self, r: f64) -> C64 {
        let rho = r * self.unit().sqrt();
        let theta = std::f64::consts::TAU * self.unit();
        C64::from_polar(rho, theta)
    }

    /// Uniform on the annulus `a ≤ |z| ≤ b`.
    pub fn annulus(&mut self, a: f64, b: f64) -> C64 {
        let rho = (a * a + (b * b - a * a) * self.unit()).sqrt();
        let theta = std::f64::consts::TAU * self.unit();
        C64::from_polar(rho, theta)
    }
}

/// Certified input region of a claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `|z_k| ≤ radius` for each of `dim` coordinates.
    Disk { radius: f64, dim: usize },
    /// `Re z_k, Im z_k ∈ [0, 1]`.
    Cube { d: usize },
    /// `|z_k| ≤ radius` and `|Re z_k| ≤ bound`.
    DiskWithRealBound { radius: f64, bound: f64, dim: usize },
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Self::Disk { radius, dim: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Disk { radius, dim } => radius > 0.0 && radius.is_finite() && dim > 0,
            Domain::Cube { d } => d > 0,
            Domain::DiskWithRealBound { radius, bound, dim } => {
                radius > 0.0 && bound > 0.0 && radius.is_finite() && dim > 0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid domain {self:?}")))
        }
    }

    /// Number of complex coordinates.
    pub fn dim(&self) -> usize {
        match *self {
            Domain::Disk { dim, .. } | Domain::DiskWithRealBound { dim, .. } => dim,
            Domain::Cube { d } => d,
        }
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        z.len() == self.dim()
            && z.iter().all(|z| match *self {
                Domain::Disk { radius, .. } => z.norm() <= radius,
                Domain::Cube { .. } => (0.0..=1.0).contains(&z.re) && (0.0..=1.0).contains(&z.im),
                Domain::DiskWithRealBound { radius, bound, .. } => {
                    z.norm() <= radius && z.re.abs() <= bound
                }
            })
    }

    /// `(re_lo, re_hi, im_lo, im_hi)` per coordinate.
    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Domain::Disk { radius, .. } => (-radius, radius, -radius, radius),
            Domain::Cube { .. } => (0.0, 1.0, 0.0, 1.0),
            Domain::DiskWithRealBound { radius, bound, .. } => {
                let b = bound.min(radius);
                (-b, b, -radius, radius)
            }
        }
    }

    pub fn sample(&self, rng: &mut SampleRng) -> Vec<C64> {
        (0..self.dim())
            .map(|_| match *self {
                Domain::Disk { radius, .. } => rng.disk(radius),
                Domain::Cube { .. } => {
                    let re = rng.unit();
                    C64::new(re, rng.unit())
                }
                Domain::DiskWithRealBound { radius, bound, .. } => loop {
                    let z = rng.disk(radius);
                    if z.re.abs() <= bound {
                        break z;
                    }
                },
            })
            .collect()
    }

    /// Tensor grid with `⌊samples^{1/(2·dim)}⌋` nodes per real axis over the
    /// bounding box, restricted to the domain.
    pub fn grid(&self, samples: usize) -> Vec<Vec<C64>> {
        let axes = 2 * self.dim();
        let mut per_axis = (samples as f64).powf(1.0 / axes as f64).floor() as usize;
        while (per_axis + 1).checked_pow(axes as u32).is_some_and(|v| v <= samples) {
            per_axis += 1;
        }
        if per_axis < 2 {
            return Vec::new();
        }
        let (rl, rh, il, ih) = self.bounding_box();
        let node = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64;
        let total = per_axis.pow(axes as u32);
        (0..total)
            .filter_map(|mut idx| {
                let mut coords = vec![0usize; axes];
                for c in coords.iter_mut().rev() {
                    *c = idx % per_axis;
                    idx /= per_axis;
                }
                let z: Vec<C64> = (0..self.dim())
                    .map(|k| C64::new(node(rl, rh, coords[2 * k]), node(il, ih, coords[2 * k + 1])))
                    .collect();
                self.contains(&z).then_some(z)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_outputs() {
        let mut r = SampleRng::new(0);
        assert_eq!(r.next_u64(), 0x53175d61490b23df);
        assert_eq!(r.next_u64(), 0x61da6f3dc380d507);
        assert_eq!(r.next_u64(), 0x5c0fdf91ec9a7bfc);
    }

    #[test]
    fn samples_stay_inside() {
        let mut r = SampleRng::new(3);
        for dom in [
            Domain::disk(2.0),
            Domain::Cube { d: 2 },
            Domain::DiskWithRealBound { radius: 3.0, bound: 1.0, dim: 1 },
        ] {
            for _ in 0..1000 {
                assert!(dom.contains(&dom.sample(&mut r)));
            }
            assert!(dom.grid(400).iter().all(|z| dom.contains(z)));
        }
        assert_eq!(Domain::Cube { d: 1 }.grid(1681).len(), 1681);
    }
}
