//! Counting monotone lattice paths inside a band of gaps.
//!
//! A path moves right (`l1 + 1`) or up (`l2 + 1`) and must keep the gap
//! `l2 - l1` inside the band; leaving it corresponds to a capitulation.

use astro_float::BigFloat;
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::State;
use crate::precise::{bits_for, to_f64, trunc_to_biguint, Ctx};

/// Largest distance from an integer accepted when recovering a count from
/// its trigonometric representation.
pub const INTEGER_GATE: f64 = 1e-6;

/// Exact path count together with its natural logarithm.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCount {
    pub value: BigUint,
    /// `ln(value)`; `-∞` for zero.
    pub log_value: f64,
}

impl PathCount {
    pub fn new(value: BigUint) -> Self {
        let log_value = ln_big(&value);
        Self { value, log_value }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

impl From<u64> for PathCount {
    fn from(v: u64) -> Self {
        Self::new(BigUint::from(v))
    }
}

impl Serialize for PathCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PathCount", 2)?;
        st.serialize_field("value", &self.value.to_string())?;
        st.serialize_field(
            "log_value",
            &self.log_value.is_finite().then_some(self.log_value),
        )?;
        st.end()
    }
}

/// Natural log of a big integer, accurate to a few ulps at any size.
pub fn ln_big(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("finite below 2^1000").ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Admissible gaps `lo..=hi` of a band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Band {
    pub lo: i64,
    pub hi: i64,
}

impl Band {
    /// Gaps `0..=g`: the region kept by a constant-gap player against
    /// Frontier.
    pub fn width(g: u32) -> Self {
        Self {
            lo: 0,
            hi: i64::from(g),
        }
    }

    pub fn contains(&self, s: State) -> bool {
        (self.lo..=self.hi).contains(&s.gap())
    }
}

/// Number of monotone paths `from → to` that never leave `band`, by
/// dynamic programming over the rectangle.
pub fn count_paths_dp(from: State, to: State, band: &Band) -> PathCount {
    PathCount::new(paths_dp(from, to, band))
}

fn paths_dp(from: State, to: State, band: &Band) -> BigUint {
    if to.l1 < from.l1 || to.l2 < from.l2 || !band.contains(from) || !band.contains(to) {
        return BigUint::ZERO;
    }
    let w = (to.l2 - from.l2) as usize + 1;
    let mut row = vec![BigUint::ZERO; w];
    for i in 0..=(to.l1 - from.l1) {
        for j in 0..w {
            let s = State::new(from.l1 + i, from.l2 + j as u32);
            if !band.contains(s) {
                row[j] = BigUint::ZERO;
                continue;
            }
            if i == 0 && j == 0 {
                row[j] = BigUint::from(1u32);
            } else if j > 0 {
                // row[j] still holds the count arriving by a right step.
                let below = row[j - 1].clone();
                row[j] += below;
            }
        }
    }
    row.pop().unwrap_or_default()
}

/// Binomial row `C(n, 0..=n)`.
fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::from(1u32);
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

fn binom(row: &[BigUint], k: i64) -> BigInt {
    usize::try_from(k)
        .ok()
        .and_then(|k| row.get(k))
        .map_or_else(BigInt::zero, |v| BigInt::from(v.clone()))
}

fn nonnegative(v: BigInt) -> Result<BigUint> {
    match v.sign() {
        Sign::Minus => Err(Error::NonFinite("negative alternating path sum")),
        _ => Ok(v.magnitude().clone()),
    }
}

/// Interior path counts to `(d,d)` in the band of width `g`, starting from
/// `(0,0)` and from `(0,s)`, by the reflection-principle sums.
pub fn count_constant_gap(d: u32, g: u32, s: u32) -> Result<(PathCount, PathCount)> {
    if g == 0 || g > d || s > g {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ g ≤ d and s ≤ g, got d={d}, g={g}, s={s}"
        )));
    }
    let (d, g, s) = (i64::from(d), i64::from(g), i64::from(s));
    let period = g + 2;
    let reach = d / period + 2;
    let full = binomial_row(2 * d as u64);
    let short = binomial_row((2 * d - s) as u64);
    let mut n00 = BigInt::zero();
    let mut n0s = BigInt::zero();
    for k in -reach..=reach {
        n00 += binom(&full, d - k * period) - binom(&full, d - k * period + g + 1);
        n0s += binom(&short, d - k * period) - binom(&short, d - s - k * period + g + 1);
    }
    Ok((
        PathCount::new(nonnegative(n00)?),
        PathCount::new(nonnegative(n0s)?),
    ))
}

/// Paths `(0,0) → (l, l+m)` inside the band of width `g`, from the
/// eigen-expansion of the band's transfer matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandCount {
    pub count: PathCount,
    /// Unrounded trigonometric value.
    pub raw: f64,
    /// Distance of the trigonometric value from `count`.
    pub distance: f64,
    /// Mantissa bits used for the evaluation.
    pub bits: usize,
}

fn check_band(m: u32, g: u32) -> Result<()> {
    if g == 0 || m > g {
        return Err(Error::InvalidParameter(format!(
            "need g ≥ 1 and m ≤ g, got m={m}, g={g}"
        )));
    }
    Ok(())
}

/// Double-precision evaluation with compensated summation.
pub fn band_paths_trig_f64(l: u32, m: u32, g: u32) -> f64 {
    let n = f64::from(g + 2);
    let e = (2 * l + m) as i32;
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for k in 1..=g + 1 {
        let th = std::f64::consts::PI * f64::from(k) / n;
        let term = th.sin() * (th * f64::from(m + 1)).sin() * (2.0 * th.cos()).powi(e);
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    2.0 / n * sum
}

/// Evaluates the trigonometric count, first in double precision and, when
/// the magnitude or rounding distance calls for it, with enough extra bits
/// to recover the integer exactly.
pub fn count_band_paths(l: u32, m: u32, g: u32) -> Result<BandCount> {
    check_band(m, g)?;
    let raw = band_paths_trig_f64(l, m, g);
    if raw.abs() < 2f64.powi(40) {
        let rounded = raw.round();
        let distance = (raw - rounded).abs();
        if distance <= INTEGER_GATE {
            return Ok(BandCount {
                count: PathCount::from(rounded.max(0.0) as u64),
                raw,
                distance,
                bits: f64::MANTISSA_DIGITS as usize,
            });
        }
    }
    let bits = bits_for((2 * l + m) as usize, 128);
    band_paths_extended(l, m, g, bits)
}

/// The trigonometric count evaluated with `bits` of mantissa.
pub fn band_paths_extended(l: u32, m: u32, g: u32, bits: usize) -> Result<BandCount> {
    check_band(m, g)?;
    let mut ctx = Ctx::new(bits);
    let n = u64::from(g + 2);
    let e = (2 * l + m) as usize;
    let mut sum = ctx.int(0);
    for k in 1..=u64::from(g) + 1 {
        let th = ctx.angle(k, n);
        let thm = ctx.angle(k * u64::from(m + 1), n);
        let c = ctx.cos(&th);
        let two_c = ctx.mul(&ctx.int(2), &c);
        let (a, b) = (ctx.sin(&th), ctx.sin(&thm));
        let term = ctx.mul(&a, &b);
        let term = ctx.mul(&term, &ctx.powi(&two_c, e));
        sum = ctx.add(&sum, &term);
    }
    let value = ctx.div(&ctx.mul(&ctx.int(2), &sum), &ctx.int(n));
    let half = ctx.num(0.5);
    let shifted: BigFloat = ctx.add(&value, &half);
    let count = trunc_to_biguint(&shifted);
    let distance = to_f64(&ctx.sub(&value, &big_to_float(&ctx, &count))).abs();
    let raw = to_f64(&value);
    if distance > INTEGER_GATE || value.is_negative() {
        return Err(Error::PrecisionLoss {
            value: raw,
            distance,
            bits,
        });
    }
    Ok(BandCount {
        count: PathCount::new(count),
        raw,
        distance,
        bits,
    })
}

fn big_to_float(ctx: &Ctx, v: &BigUint) -> BigFloat {
    let mut out = ctx.int(0);
    let base = ctx.num(2f64.powi(32));
    for digit in v.iter_u32_digits().rev() {
        out = ctx.add(&ctx.mul(&out, &base), &ctx.int(u64::from(digit)));
    }
    out
}

/// Band count by dynamic programming.
pub fn band_paths_dp(l: u32, m: u32, g: u32) -> PathCount {
    count_paths_dp(State::origin(), State::new(l, l + m), &Band::width(g))
}
