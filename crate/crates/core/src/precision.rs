//! Evaluation precision.
//!
//! The extractor networks cancel terms of size `1/h³` down to values of
//! order one, so once weights grow past about `2^20` double precision no
//! longer resolves the realized function. Such networks are evaluated with
//! MPFR floats whose precision grows with the largest weight; inputs and
//! outputs stay `f64`.

use std::cell::RefCell;

use rug::ops::SubFrom;
use rug::{Assign, Float};

use crate::activation::modrelu;
use crate::layer::AffineLayer;
use crate::C64;

/// How a network's layers are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalPolicy {
    /// Double precision for moderate weights, MPFR above [`DOUBLE_WEIGHT_LIMIT`].
    #[default]
    Auto,
    /// Always double precision.
    Double,
    /// Always MPFR with the given number of bits.
    Bits(u32),
}

/// Largest weight magnitude evaluated in double precision under [`EvalPolicy::Auto`].
pub const DOUBLE_WEIGHT_LIMIT: f64 = 1048576.0;

/// Guard bits kept below the output's unit in the last place.
const GUARD_BITS: f64 = 72.0;

/// Working precision for a network whose largest weight is `max_weight`,
/// or `None` when double precision suffices.
pub fn required_bits(max_weight: f64) -> Option<u32> {
    if max_weight <= DOUBLE_WEIGHT_LIMIT {
        return None;
    }
    let bits = (max_weight.log2() + GUARD_BITS).ceil() as u32;
    Some(bits.div_ceil(64) * 64)
}

pub(crate) fn bits_for(policy: EvalPolicy, max_weight: f64) -> Option<u32> {
    match policy {
        EvalPolicy::Auto => required_bits(max_weight),
        EvalPolicy::Double => None,
        EvalPolicy::Bits(b) => Some(b.max(64)),
    }
}

pub(crate) fn eval_layers_f64(layers: &[AffineLayer], x: &[C64]) -> Vec<C64> {
    let last = layers.len() - 1;
    let mut cur = x.to_vec();
    for (i, layer) in layers.iter().enumerate() {
        let mut next = layer.apply(&cur);
        if i < last {
            for z in next.iter_mut() {
                *z = modrelu(*z);
            }
        }
        cur = next;
    }
    cur
}

struct Workspace {
    prec: u32,
    cur: Vec<(Float, Float)>,
    next: Vec<(Float, Float)>,
    t1: Float,
    t2: Float,
}

impl Workspace {
    fn new(prec: u32) -> Self {
        Self { prec, cur: Vec::new(), next: Vec::new(), t1: Float::new(prec), t2: Float::new(prec) }
    }

    fn reserve(&mut self, width: usize) {
        let p = self.prec;
        while self.cur.len() < width {
            self.cur.push((Float::new(p), Float::new(p)));
        }
        while self.next.len() < width {
            self.next.push((Float::new(p), Float::new(p)));
        }
    }
}

thread_local! {
    static WORKSPACES: RefCell<Vec<Workspace>> = const { RefCell::new(Vec::new()) };
}

fn hp_sigma(re: &mut Float, im: &mut Float, t1: &mut Float, t2: &mut Float) {
    t1.assign(re.square_ref());
    t2.assign(im.square_ref());
    *t1 += &*t2;
    if *t1 <= 1u32 {
        re.assign(0u32);
        im.assign(0u32);
    } else {
        t1.recip_sqrt_mut();
        t1.sub_from(1u32);
        *re *= &*t1;
        *im *= &*t1;
    }
}

pub(crate) fn eval_layers_mpfr(layers: &[AffineLayer], x: &[C64], prec: u32) -> Vec<C64> {
    WORKSPACES.with(|cell| {
        let mut all = cell.borrow_mut();
        let idx = match all.iter().position(|w| w.prec == prec) {
            Some(i) => i,
            None => {
                all.push(Workspace::new(prec));
                all.len() - 1
            }
        };
        let ws = &mut all[idx];
        let width = layers.iter().map(|l| l.rows()).max().unwrap_or(0);
        ws.reserve(width);
        let Workspace { cur, next, t1, t2, .. } = ws;
        let last = layers.len() - 1;

        // First layer reads the f64 input directly; products of two doubles
        // are exact at any precision of at least 106 bits.
        let first = &layers[0];
        for (r, (re, im)) in next.iter_mut().enumerate().take(first.rows()) {
            let b = first.bias()[r];
            re.assign(b.re);
            im.assign(b.im);
            for (c, a) in first.row_entries(r) {
                let xv = x[c];
                if a.re != 0.0 {
                    if xv.re != 0.0 {
                        t1.assign(xv.re);
                        *t1 *= a.re;
                        *re += &*t1;
                    }
                    if xv.im != 0.0 {
                        t1.assign(xv.im);
                        *t1 *= a.re;
                        *im += &*t1;
                    }
                }
                if a.im != 0.0 {
                    if xv.im != 0.0 {
                        t1.assign(xv.im);
                        *t1 *= a.im;
                        *re -= &*t1;
                    }
                    if xv.re != 0.0 {
                        t1.assign(xv.re);
                        *t1 *= a.im;
                        *im += &*t1;
                    }
                }
            }
            if last > 0 {
                hp_sigma(re, im, t1, t2);
            }
        }
        std::mem::swap(cur, next);

        for (li, layer) in layers.iter().enumerate().skip(1) {
            for (r, (re, im)) in next.iter_mut().enumerate().take(layer.rows()) {
                let b = layer.bias()[r];
                re.assign(b.re);
                im.assign(b.im);
                for (c, a) in layer.row_entries(r) {
                    let (xr, xi) = &cur[c];
                    if a.re != 0.0 {
                        t1.assign(xr * a.re);
                        *re += &*t1;
                        t1.assign(xi * a.re);
                        *im += &*t1;
                    }
                    if a.im != 0.0 {
                        t1.assign(xi * a.im);
                        *re -= &*t1;
                        t1.assign(xr * a.im);
                        *im += &*t1;
                    }
                }
                if li < last {
                    hp_sigma(re, im, t1, t2);
                }
            }
            std::mem::swap(cur, next);
        }
        let out_rows = layers[last].rows();
        cur[..out_rows].iter().map(|(re, im)| C64::new(re.to_f64(), im.to_f64())).collect()
    })
}

pub(crate) fn eval_layers(layers: &[AffineLayer], x: &[C64], bits: Option<u32>) -> Vec<C64> {
    match bits {
        None => eval_layers_f64(layers, x),
        Some(p) => eval_layers_mpfr(layers, x, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_rule() {
        assert_eq!(required_bits(10.0), None);
        assert_eq!(required_bits(DOUBLE_WEIGHT_LIMIT), None);
        assert_eq!(required_bits(2f64.powi(40)), Some(128));
        assert_eq!(required_bits(2f64.powi(102)), Some(192));
        assert_eq!(required_bits(2f64.powi(132)), Some(256));
    }

    #[test]
    fn mpfr_matches_double_on_tame_layers() {
        let l1 = AffineLayer::from_rows(
            &[vec![C64::new(2.0, 1.0)], vec![C64::new(-1.0, 0.5)]],
            &[C64::new(0.5, -1.0), C64::new(3.0, 0.0)],
        )
        .unwrap();
        let l2 = AffineLayer::from_rows(
            &[vec![C64::new(1.0, 0.0), C64::new(0.0, -2.0)]],
            &[C64::new(0.25, 0.0)],
        )
        .unwrap();
        let layers = [l1, l2];
        for x in [C64::new(0.3, -0.7), C64::new(2.0, 1.0), C64::new(0.0, 0.0)] {
            let a = eval_layers_f64(&layers, &[x]);
            let b = eval_layers_mpfr(&layers, &[x], 128);
            assert!((a[0] - b[0]).norm() < 1e-14, "{a:?} vs {b:?}");
        }
    }
}
