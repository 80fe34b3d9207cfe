//! Closed forms for a constant-gap player (restart 0, no depth limit)
//! against Frontier, and the market-share curves built from them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::payoff::{CostModel, PayoffReport};
use crate::precise::{bits_for, to_f64, Ctx};

/// Relative error estimate above which a point is re-evaluated with
/// extended precision.
pub const PRECISION_GATE: f64 = 1e-9;

/// Stationary block rates for one `(g, p1)` point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub gamma: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Estimated relative rounding error of the double-precision pass.
    pub error_estimate: f64,
    /// Whether the result comes from the extended-precision pass.
    pub extended: bool,
}

impl ClosedForm {
    /// Stationary mass of `(0,0)`.
    pub fn origin_mass(&self, g: u32) -> f64 {
        (f64::from(g) + 2.0) / (2.0 * self.gamma)
    }
}

fn check(g: u32, p1: f64) -> Result<()> {
    check_probability(p1)?;
    if g == 0 {
        return Err(Error::InvalidParameter("gap must be at least 1".into()));
    }
    Ok(())
}

/// Normalisation sum relating the closed forms to the stationary law.
pub fn gamma_const_gap(g: u32, p1: f64) -> Result<f64> {
    Ok(evaluate(g, p1)?.gamma)
}

/// `(ρ1, ρ2)`: validated blocks per turn for each player.
pub fn rho_const_gap(g: u32, p1: f64) -> Result<(f64, f64)> {
    let c = evaluate(g, p1)?;
    Ok((c.rho1, c.rho2))
}

/// Evaluates Γ, ρ1 and ρ2, escalating to extended precision when the
/// alternating sums lose too many digits in double precision.
pub fn evaluate(g: u32, p1: f64) -> Result<ClosedForm> {
    check(g, p1)?;
    let fast = eval_f64(g, p1);
    let out = if fast.error_estimate > PRECISION_GATE || !fast.is_finite() {
        let digits_lost = fast.condition.max(1.0).log2().ceil() as usize;
        eval_extended(g, p1, bits_for(digits_lost, 128), fast.error_estimate)
    } else {
        ClosedForm {
            gamma: fast.gamma,
            rho1: fast.rho1,
            rho2: fast.rho2,
            error_estimate: fast.error_estimate,
            extended: false,
        }
    };
    if !(out.gamma.is_finite() && out.rho1.is_finite() && out.rho2.is_finite()) {
        return Err(Error::NonFinite("closed-form sums"));
    }
    Ok(out)
}

struct Fast {
    gamma: f64,
    rho1: f64,
    rho2: f64,
    condition: f64,
    error_estimate: f64,
}

impl Fast {
    fn is_finite(&self) -> bool {
        self.gamma.is_finite() && self.rho1.is_finite() && self.rho2.is_finite()
    }
}

/// Neumaier-compensated sum that also tracks `Σ|t|`.
#[derive(Default)]
struct Acc {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl Acc {
    fn add(&mut self, t: f64) {
        let s = self.sum + t;
        if self.sum.abs() >= t.abs() {
            self.comp += (self.sum - s) + t;
        } else {
            self.comp += (t - s) + self.sum;
        }
        self.sum = s;
        self.abs += t.abs();
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn condition(&self) -> f64 {
        self.abs / self.value().abs()
    }
}

fn eval_f64(g: u32, p1: f64) -> Fast {
    let p2 = 1.0 - p1;
    let x = p1 * p2;
    let n = f64::from(g + 2);
    let gf = f64::from(g);
    let mut gamma = Acc::default();
    let mut r1 = Acc::default();
    let mut r2 = Acc::default();
    for k in 1..=g + 1 {
        let th = std::f64::consts::PI * f64::from(k) / n;
        let (s, c) = th.sin_cos();
        let den = 1.0 - 4.0 * x * c * c;
        let ratio = 2.0 * c * p2;
        let mut pow = 1.0;
        for m in 0..=g {
            gamma.add(s * (f64::from(m + 1) * th).sin() * pow / den);
            pow *= ratio;
        }
        r1.add(s * s / (den * den));
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        r2.add(sign * s * s * (2.0 * c).powi(g as i32) / (den * den) * (gf * den + 1.0));
    }
    let condition = gamma.condition().max(r2.condition()).max(r1.condition());
    let gv = gamma.value();
    Fast {
        gamma: gv,
        rho1: p1 / gv * r1.value(),
        rho2: p2.powi(g as i32 + 1) / gv * r2.value(),
        condition,
        error_estimate: condition * (gf + 4.0) * f64::EPSILON,
    }
}

fn eval_extended(g: u32, p1: f64, bits: usize, error_estimate: f64) -> ClosedForm {
    let mut ctx = Ctx::new(bits);
    let one = ctx.int(1);
    let two = ctx.int(2);
    let four = ctx.int(4);
    let p1b = ctx.num(p1);
    let p2b = ctx.sub(&one, &p1b);
    let x = ctx.mul(&p1b, &p2b);
    let gb = ctx.int(u64::from(g));
    let mut gamma = ctx.int(0);
    let mut r1 = ctx.int(0);
    let mut r2 = ctx.int(0);
    for k in 1..=u64::from(g) + 1 {
        let th = ctx.angle(k, u64::from(g) + 2);
        let s = ctx.sin(&th);
        let c = ctx.cos(&th);
        let two_c = ctx.mul(&two, &c);
        let c2 = ctx.mul(&c, &c);
        let den = ctx.sub(&one, &ctx.mul(&ctx.mul(&four, &x), &c2));
        let den2 = ctx.mul(&den, &den);
        let ratio = ctx.mul(&two_c, &p2b);
        // sin((m+1)θ) by the Chebyshev recurrence.
        let (mut prev, mut cur) = (ctx.int(0), s.clone());
        let mut pow = ctx.int(1);
        let mut inner = ctx.int(0);
        for _ in 0..=g {
            inner = ctx.add(&inner, &ctx.mul(&cur, &pow));
            pow = ctx.mul(&pow, &ratio);
            let next = ctx.sub(&ctx.mul(&two_c, &cur), &prev);
            prev = cur;
            cur = next;
        }
        gamma = ctx.add(&gamma, &ctx.div(&ctx.mul(&s, &inner), &den));
        let s2 = ctx.mul(&s, &s);
        r1 = ctx.add(&r1, &ctx.div(&s2, &den2));
        let t = ctx.div(&ctx.mul(&s2, &ctx.powi(&two_c, g as usize)), &den2);
        let t = ctx.mul(&t, &ctx.add(&ctx.mul(&gb, &den), &one));
        r2 = if k % 2 == 1 {
            ctx.add(&r2, &t)
        } else {
            ctx.sub(&r2, &t)
        };
    }
    let rho1 = ctx.div(&ctx.mul(&p1b, &r1), &gamma);
    let rho2 = ctx.div(&ctx.mul(&ctx.powi(&p2b, g as usize + 1), &r2), &gamma);
    ClosedForm {
        gamma: to_f64(&gamma),
        rho1: to_f64(&rho1),
        rho2: to_f64(&rho2),
        error_estimate,
        extended: true,
    }
}

/// One row of the market-share table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstGapPoint {
    /// Gap tolerance; 0 stands for the Frontier baseline.
    pub g: u32,
    pub p1: f64,
    pub gamma: Option<f64>,
    #[serde(flatten)]
    pub report: PayoffReport,
    pub flags: Vec<String>,
}

impl ConstGapPoint {
    pub fn is_frontier(&self) -> bool {
        self.g == 0
    }
}

/// Evaluates one point; `g = 0` gives the both-Frontier baseline.
pub fn curve_point(g: u32, p1: f64, costs: CostModel, tau_bar: f64) -> Result<ConstGapPoint> {
    check_probability(p1)?;
    let (c1, c2) = costs.rates(p1);
    if g == 0 {
        return Ok(ConstGapPoint {
            g,
            p1,
            gamma: None,
            report: PayoffReport::from_rates(p1, 1.0 - p1, c1, c2, tau_bar)?,
            flags: vec!["frontier".into()],
        });
    }
    let cf = evaluate(g, p1)?;
    let mut flags = Vec::new();
    if cf.extended {
        flags.push("extended".into());
    }
    Ok(ConstGapPoint {
        g,
        p1,
        gamma: Some(cf.gamma),
        report: PayoffReport::from_rates(cf.rho1, cf.rho2, c1, c2, tau_bar)?,
        flags,
    })
}

/// Table over `gs × p1s`, ordered by `g` then `p1`. A point that cannot be
/// evaluated is kept with NaN values and an `error` flag.
pub fn market_share_curve(
    gs: &[u32],
    p1s: &[f64],
    costs: CostModel,
    tau_bar: f64,
) -> Result<Vec<ConstGapPoint>> {
    if gs.is_empty() || p1s.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if !(tau_bar > 0.0 && tau_bar.is_finite()) {
        return Err(Error::InvalidParameter(
            "target time must be positive".into(),
        ));
    }
    let points: Vec<(u32, f64)> = gs
        .iter()
        .flat_map(|&g| p1s.iter().map(move |&p| (g, p)))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(g, p1)| {
            curve_point(g, p1, costs, tau_bar).unwrap_or_else(|e| ConstGapPoint {
                g,
                p1,
                gamma: None,
                report: PayoffReport {
                    rho1: f64::NAN,
                    rho2: f64::NAN,
                    h: f64::NAN,
                    g1: f64::NAN,
                    g2: f64::NAN,
                    r1: f64::NAN,
                    r2: f64::NAN,
                    c1: f64::NAN,
                    c2: f64::NAN,
                    tau_bar,
                    tau_b: f64::NAN,
                },
                flags: vec![format!("error: {e}")],
            })
        })
        .collect())
}

/// Truncation depth that makes the finite chain a good proxy for the
/// closed forms at gap `g`.
pub fn default_truncation(g: u32) -> u32 {
    200.max(20 * g)
}
