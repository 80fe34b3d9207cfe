//! Asymptotic rewards, block shares and revenues from the stationary law.

use serde::{Deserialize, Serialize};

use crate::chain::{build_chain, stationary, Distribution, MiningChain};
use crate::error::{Error, Result};
use crate::game::Player;
use crate::policy::CapitulationPolicy;

/// Cost per minute per unit of hashing power assumed by default.
pub const DEFAULT_COST_RATE: f64 = 0.005;
/// Target minutes per validated block.
pub const DEFAULT_TARGET_MINUTES: f64 = 10.0;

/// Marginal cost of mining, in block rewards per minute, for power `p`.
pub fn default_cost(p: f64) -> f64 {
    DEFAULT_COST_RATE * p
}

/// Per-player cost rates in block rewards per minute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    /// `c_i = rate * p_i`.
    Proportional {
        rate: f64,
    },
    Fixed {
        c1: f64,
        c2: f64,
    },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Proportional {
            rate: DEFAULT_COST_RATE,
        }
    }
}

impl CostModel {
    pub const ZERO: CostModel = CostModel::Fixed { c1: 0.0, c2: 0.0 };

    pub fn rates(&self, p1: f64) -> (f64, f64) {
        match *self {
            CostModel::Proportional { rate } => (rate * p1, rate * (1.0 - p1)),
            CostModel::Fixed { c1, c2 } => (c1, c2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffReport {
    /// Validated blocks per turn for each player.
    pub rho1: f64,
    pub rho2: f64,
    /// Validated blocks per turn in total.
    pub h: f64,
    /// Shares of validated blocks.
    pub g1: f64,
    pub g2: f64,
    /// Net revenue per turn, in block rewards.
    pub r1: f64,
    pub r2: f64,
    /// Cost rates, block rewards per minute.
    pub c1: f64,
    pub c2: f64,
    /// Target minutes per validated block.
    pub tau_bar: f64,
    /// Mean turn length in minutes.
    pub tau_b: f64,
}

impl PayoffReport {
    /// Assembles a report from the per-turn block rates.
    pub fn from_rates(rho1: f64, rho2: f64, c1: f64, c2: f64, tau_bar: f64) -> Result<Self> {
        let h = rho1 + rho2;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::DegenerateRate(h));
        }
        Ok(Self {
            rho1,
            rho2,
            h,
            g1: rho1 / h,
            g2: rho2 / h,
            r1: rho1 - c1 * tau_bar * h,
            r2: rho2 - c2 * tau_bar * h,
            c1,
            c2,
            tau_bar,
            tau_b: h * tau_bar,
        })
    }

    pub fn share(&self, player: Player) -> f64 {
        match player {
            Player::One => self.g1,
            Player::Two => self.g2,
        }
    }
}

/// Expected round-ending reward per turn at each state, for each player.
pub fn reward_vectors(chain: &MiningChain) -> (Vec<f64>, Vec<f64>) {
    let mut r = [vec![0.0; chain.len()], vec![0.0; chain.len()]];
    for player in [Player::One, Player::Two] {
        let p = chain.win_probability(player);
        for i in chain.boundary(player) {
            let e = chain.edge(i, player);
            let blocks = match player {
                Player::One => e.rewards.0,
                Player::Two => e.rewards.1,
            };
            r[player.index()][i] = p * blocks as f64;
        }
    }
    let [r1, r2] = r;
    (r1, r2)
}

pub fn evaluate(
    chain: &MiningChain,
    pi: &Distribution,
    c1: f64,
    c2: f64,
    tau_bar: f64,
) -> Result<PayoffReport> {
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::InvalidParameter("costs must be nonnegative".into()));
    }
    if !(tau_bar > 0.0 && tau_bar.is_finite()) {
        return Err(Error::InvalidParameter(
            "target time must be positive".into(),
        ));
    }
    let (r1, r2) = reward_vectors(chain);
    PayoffReport::from_rates(pi.dot(&r1), pi.dot(&r2), c1, c2, tau_bar)
}

/// Builds the chain, solves it and evaluates the payoffs.
pub fn analyze(
    policy1: &CapitulationPolicy,
    policy2: &CapitulationPolicy,
    p1: f64,
    depth: u32,
    costs: CostModel,
    tau_bar: f64,
) -> Result<PayoffReport> {
    let chain = build_chain(policy1, policy2, p1, depth)?;
    let pi = stationary(&chain)?;
    let (c1, c2) = costs.rates(p1);
    evaluate(&chain, &pi, c1, c2, tau_bar)
}
