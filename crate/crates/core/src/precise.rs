//! Extended-precision helpers on top of `astro_float`.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigUint;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision with `extra` guard bits on top of `magnitude_bits`.
pub(crate) fn bits_for(magnitude_bits: usize, extra: usize) -> usize {
    (magnitude_bits + extra).div_ceil(64) * 64
}

pub(crate) struct Ctx {
    pub p: usize,
    cc: Consts,
}

impl Ctx {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            cc: Consts::new().expect("constant cache allocation"),
        }
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn int(&self, n: u64) -> BigFloat {
        BigFloat::from_u64(n, self.p)
    }

    /// `π k / n`.
    pub fn angle(&mut self, k: u64, n: u64) -> BigFloat {
        let pi = self.cc.pi(self.p, RM);
        pi.mul(&self.int(k), self.p, RM)
            .div(&self.int(n), self.p, RM)
    }

    pub fn sin(&mut self, x: &BigFloat) -> BigFloat {
        x.sin(self.p, RM, &mut self.cc)
    }

    pub fn cos(&mut self, x: &BigFloat) -> BigFloat {
        x.cos(self.p, RM, &mut self.cc)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        if n == 0 {
            self.int(1)
        } else {
            a.powi(n, self.p, RM)
        }
    }
}

/// Nearest double to `x` (up to one ulp).
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    if x.is_zero() {
        return 0.0;
    }
    let k = words.len();
    let hi = words[k - 1] as f64;
    let lo = if k >= 2 { words[k - 2] as f64 } else { 0.0 };
    let mag = (hi + lo * 2f64.powi(-64)) * 2f64.powi(exp - 64);
    match sign {
        Sign::Neg => -mag,
        Sign::Pos => mag,
    }
}

/// Value of `x` truncated towards zero, as a magnitude.
pub(crate) fn trunc_to_biguint(x: &BigFloat) -> BigUint {
    let Some((words, _, _, exp, _)) = x.as_raw_parts() else {
        return BigUint::ZERO;
    };
    if x.is_zero() || exp <= 0 {
        return BigUint::ZERO;
    }
    let mut digits = Vec::with_capacity(2 * words.len());
    for &w in words {
        digits.push(w as u32);
        digits.push((w >> 32) as u32);
    }
    let m = BigUint::new(digits);
    let total = 64 * words.len() as i64;
    let shift = total - i64::from(exp);
    if shift >= 0 {
        m >> shift as usize
    } else {
        m << (-shift) as usize
    }
}
