//! Direct real/complex-arithmetic references for the network builders.
//! These are plain functions, not networks.

use crate::activation::{modrelu, relu};
use crate::C64;

/// The three-term smooth real-part map `Re_h` evaluated without the
/// catastrophic cancellation of its defining formula.
///
/// `Re_h(z) = t²(σ(2hz + 4t + 2 − 2it) − σ(hz + 2t + 1 − it) − σ(hz − it) + i − 2t − 1)`
/// with `t = 1/h`. When all three activations are on the shrink branch
/// this equals `t²(i + w/|w|)` with `w = hz − it`, rewritten here so that no
/// large terms cancel.
pub fn ref_re_h(h: f64, z: C64) -> C64 {
    let t = 1.0 / h;
    let w = C64::new(h * z.re, h * z.im - t);
    let a2 = w + C64::new(2.0 * t + 1.0, 0.0);
    let wn = w.norm();
    if wn > 1.0 && a2.norm() > 1.0 {
        let hz = C64::new(h * z.re, h * z.im);
        let num = hz + C64::new(0.0, (h * h * z.norm_sqr() - 2.0 * z.im) / (wn + t));
        num * (t * t / wn)
    } else {
        let a1 = a2 * 2.0;
        (modrelu(a1) - modrelu(a2) - modrelu(w) + C64::new(-2.0 * t - 1.0, 1.0)) * (t * t)
    }
}

/// `Im_h(z) = Re_h(−iz)`.
pub fn ref_im_h(h: f64, z: C64) -> C64 {
    ref_re_h(h, C64::new(z.im, -z.re))
}

/// Tent map `g(x) = 2ϱ(x) − 4ϱ(x − ½) + 2ϱ(x − 1)`.
pub fn ref_g(x: f64) -> f64 {
    2.0 * relu(x) - 4.0 * relu(x - 0.5) + 2.0 * relu(x - 1.0)
}

/// `s`-fold composition of the tent map.
pub fn ref_g_iter(s: u32, x: f64) -> f64 {
    (0..s).fold(x, |acc, _| ref_g(acc))
}

/// Sawtooth approximation of `x²`: `f_m(x) = x − Σ_{s=1}^m g_s(x)/4^s`.
pub fn ref_f_m(m: u32, x: f64) -> f64 {
    let mut acc = x;
    let mut gs = x;
    let mut scale = 1.0;
    for _ in 0..m {
        gs = ref_g(gs);
        scale *= 0.25;
        acc -= gs * scale;
    }
    acc
}

/// Bump `ψ(x)`: 1 on `|x| ≤ ½`, `3/2 − |x|` up to `|x| = 3/2`, 0 beyond.
pub fn ref_psi(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        1.0
    } else if a < 1.5 {
        1.5 - a
    } else {
        0.0
    }
}

/// `Σ_{m=0}^{2N} ψ(4N(x − m/2N))`, the partition-of-unity sum on `[0, 1]`.
pub fn ref_partition_sum(n: u32, x: f64) -> f64 {
    let nn = n as f64;
    (0..=2 * n).map(|m| ref_psi(4.0 * nn * x - 2.0 * m as f64)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values() {
        assert_eq!(ref_g(0.25), 0.5);
        assert_eq!(ref_g(0.5), 1.0);
        assert_eq!(ref_g(0.75), 0.5);
        assert_eq!(ref_g(-1.0), 0.0);
        assert_eq!(ref_g(2.0), 0.0);
    }

    #[test]
    fn psi_values() {
        assert_eq!(ref_psi(0.25), 1.0);
        assert_eq!(ref_psi(1.0), 0.5);
        assert_eq!(ref_psi(2.0), 0.0);
    }

    #[test]
    fn f_m_identity_outside_unit_interval() {
        for m in 0..6 {
            for x in [-3.0, -0.5, 1.0, 1.5, 7.0] {
                assert_eq!(ref_f_m(m, x), x);
            }
        }
        assert_eq!(ref_f_m(1, 0.5), 0.25);
    }

    #[test]
    fn stable_form_matches_direct_form() {
        // Moderate h keeps the direct formula accurate in double precision.
        let h = 0.05;
        for z in [C64::new(0.3, -0.4), C64::new(-1.0, 2.0), C64::new(0.0, 0.0)] {
            let t = 1.0 / h;
            let w = C64::new(h * z.re, h * z.im - t);
            let direct = (modrelu(w * 2.0 + C64::new(4.0 * t + 2.0, 0.0))
                - modrelu(w + C64::new(2.0 * t + 1.0, 0.0))
                - modrelu(w)
                + C64::new(-2.0 * t - 1.0, 1.0))
                * (t * t);
            assert!((direct - ref_re_h(h, z)).norm() < 1e-9, "{z}");
        }
    }
}
