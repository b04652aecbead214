//! The modReLU activation.

use crate::C64;

/// modReLU: zero on the closed unit disk, radial shrink by one outside it.
///
/// `σ(z) = z − z/|z|` for `|z| > 1`, `σ(z) = 0` otherwise.
#[inline]
pub fn modrelu(z: C64) -> C64 {
    let r = z.re.hypot(z.im);
    if r <= 1.0 {
        C64::new(0.0, 0.0)
    } else {
        let f = 1.0 - 1.0 / r;
        C64::new(z.re * f, z.im * f)
    }
}

/// Real ReLU, used by reference implementations.
#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches() {
        assert_eq!(modrelu(C64::new(0.5, 0.3)), C64::new(0.0, 0.0));
        assert_eq!(modrelu(C64::new(3.0, 0.0)), C64::new(2.0, 0.0));
        assert_eq!(modrelu(C64::new(0.0, -2.0)), C64::new(0.0, -1.0));
        assert_eq!(modrelu(C64::new(0.0, 0.0)), C64::new(0.0, 0.0));
        assert_eq!(modrelu(C64::new(1.0, 0.0)), C64::new(0.0, 0.0));
    }

    #[test]
    fn modulus_and_phase() {
        let z = C64::new(-2.0, 1.5);
        let s = modrelu(z);
        assert!((s.norm() - (z.norm() - 1.0)).abs() < 1e-15);
        assert!((s.arg() - z.arg()).abs() < 1e-15);
    }
}
