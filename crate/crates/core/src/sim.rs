//! Turn-by-turn Monte Carlo simulation of the game.
//!
//! Randomness comes from ChaCha8 seeded with the configured seed. Stream 0
//! draws race winners, stream 1 draws turn durations, and hitting
//! replication `r` uses stream `2 + r`, so every replication is
//! independent and reproducible on its own.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::MiningChain;
use crate::error::{check_probability, Error, Result};
use crate::game::{play, Move, MoveKind, Player, State};
use crate::payoff::CostModel;
use crate::policy::{validate, CapitulationPolicy};

const WINNER_STREAM: u64 = 0;
const DURATION_STREAM: u64 = 1;
const FIRST_REPLICATION_STREAM: u64 = 2;

pub const DEFAULT_BATCHES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p1: f64,
    pub policies: [CapitulationPolicy; 2],
    pub turns: u64,
    pub seed: u64,
    /// Truncation depth; combined with the policies' own depths.
    pub depth: u32,
    pub costs: CostModel,
    /// Target minutes per block. When set, turn durations are drawn and
    /// time-domain statistics reported.
    pub tau_bar: Option<f64>,
    /// State whose first passage from the origin is recorded.
    pub record_hitting: Option<State>,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(
        p1: f64,
        policy1: CapitulationPolicy,
        policy2: CapitulationPolicy,
        depth: u32,
    ) -> Self {
        Self {
            p1,
            policies: [policy1, policy2],
            turns: 1_000_000,
            seed: 0,
            depth,
            costs: CostModel::default(),
            tau_bar: None,
            record_hitting: None,
            batches: DEFAULT_BATCHES,
        }
    }

    fn effective_depth(&self) -> u32 {
        self.policies
            .iter()
            .filter_map(|p| p.depth().bounded())
            .fold(self.depth, u32::min)
    }

    fn check(&self) -> Result<u32> {
        check_probability(self.p1)?;
        if self.turns == 0 {
            return Err(Error::InvalidParameter("turns must be at least 1".into()));
        }
        if self.batches < 2 || self.turns < self.batches as u64 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 batches and one turn per batch (turns {}, batches {})",
                self.turns, self.batches
            )));
        }
        if let Some(t) = self.tau_bar {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(
                    "target time must be positive".into(),
                ));
            }
        }
        let violations = validate(&self.policies[0], &self.policies[1]);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::InvalidPolicies(text.join("; ")));
        }
        let depth = self.effective_depth();
        if self.policies.iter().any(|p| p.restart() > depth) {
            return Err(Error::InvalidParameter(format!(
                "truncation depth {depth} is below a restart depth"
            )));
        }
        Ok(depth)
    }
}

/// An estimate with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Whether `exact` lies within `k` standard errors.
    pub fn covers(&self, exact: f64, k: f64) -> bool {
        (self.value - exact).abs() <= k * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub state: State,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    /// Mean turn length used for the draws, `ĥ·τ̄`.
    pub tau_b: f64,
    pub minutes: f64,
    pub minutes_per_block: f64,
    /// Net revenues using the drawn durations for costs.
    pub r1: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub turns: u64,
    pub seed: u64,
    pub depth: u32,
    pub blocks1: i64,
    pub blocks2: i64,
    pub blocks: i64,
    pub rounds: u64,
    pub forced: u64,
    /// Shares of validated blocks, `Σr_i / ΣD`.
    pub g1: Estimate,
    pub g2: Estimate,
    /// Shares with the `1 + ΣD` denominator of the original objective.
    pub g1_verbatim: f64,
    pub g2_verbatim: f64,
    pub rho1: Estimate,
    pub rho2: Estimate,
    pub h: Estimate,
    pub r1: Estimate,
    pub r2: Estimate,
    pub visits: Vec<Visit>,
    pub time: Option<TimeStats>,
    pub hitting_turn: Option<u64>,
}

impl SimStats {
    /// Visit frequencies laid out in chain order, plus the mass on states
    /// the chain does not contain.
    pub fn frequencies_on(&self, chain: &MiningChain) -> (Vec<f64>, f64) {
        let mut v = vec![0.0; chain.len()];
        let mut outside = 0.0;
        for visit in &self.visits {
            match chain.index_of(visit.state) {
                Some(i) => v[i] = visit.frequency,
                None => outside += visit.frequency,
            }
        }
        (v, outside)
    }

    /// L1 distance between visit frequencies and a distribution on `chain`.
    pub fn l1_distance(&self, chain: &MiningChain, pi: &[f64]) -> f64 {
        let (v, outside) = self.frequencies_on(chain);
        outside + v.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_winner(rng: &mut ChaCha8Rng, p1: f64) -> Player {
    if rng.random::<f64>() < p1 {
        Player::One
    } else {
        Player::Two
    }
}

fn step(config: &SimConfig, at: State, winner: Player, depth: u32) -> Result<Move> {
    let mv = play(
        [&config.policies[0], &config.policies[1]],
        at,
        winner,
        depth,
    );
    if mv.next.l1.max(mv.next.l2) > depth {
        return Err(Error::EscapesDepth {
            state: mv.next,
            depth,
        });
    }
    Ok(mv)
}

#[derive(Default, Clone, Copy)]
struct Batch {
    turns: f64,
    r1: f64,
    r2: f64,
}

pub fn run(config: &SimConfig) -> Result<SimStats> {
    simulate(config, None)
}

/// Like [`run`], streaming the trajectory as CSV to `out`.
pub fn run_traced(config: &SimConfig, out: &mut dyn Write) -> Result<SimStats> {
    writeln!(out, "turn,l1,l2,winner,kind,reward1,reward2")?;
    simulate(config, Some(out))
}

fn simulate(config: &SimConfig, mut trace: Option<&mut dyn Write>) -> Result<SimStats> {
    let depth = config.check()?;
    let mut rng = stream(config.seed, WINNER_STREAM);
    let mut clock = config.tau_bar.map(|_| stream(config.seed, DURATION_STREAM));
    let mut unit_time = 0.0;

    let per_batch = config.turns / config.batches as u64;
    let mut batches = vec![Batch::default(); config.batches];
    let mut visits: HashMap<State, u64> = HashMap::new();
    let (mut blocks1, mut blocks2) = (0i64, 0i64);
    let (mut rounds, mut forced) = (0u64, 0u64);
    let mut hitting_turn = None;
    let mut at = State::origin();

    for n in 0..config.turns {
        if hitting_turn.is_none() && config.record_hitting == Some(at) {
            hitting_turn = Some(n);
        }
        *visits.entry(at).or_default() += 1;
        let mv = step(config, at, draw_winner(&mut rng, config.p1), depth)?;
        if let Some(c) = clock.as_mut() {
            unit_time += c.sample::<f64, _>(Exp1);
        }
        let (a, b) = mv.rewards();
        blocks1 += a;
        blocks2 += b;
        if mv.kind.ends_round() {
            rounds += 1;
        }
        if mv.kind == MoveKind::ForcedCapitulation {
            forced += 1;
        }
        let k = ((n / per_batch) as usize).min(config.batches - 1);
        let batch = &mut batches[k];
        batch.turns += 1.0;
        batch.r1 += a as f64;
        batch.r2 += b as f64;
        if let Some(w) = trace.as_deref_mut() {
            writeln!(
                w,
                "{n},{},{},{},{:?},{a},{b}",
                at.l1, at.l2, mv.winner, mv.kind
            )?;
        }
        at = mv.next;
    }
    if hitting_turn.is_none() && config.record_hitting == Some(at) {
        hitting_turn = Some(config.turns);
    }

    let n = config.turns as f64;
    let blocks = blocks1 + blocks2;
    let total = blocks as f64;
    let g1_value = if blocks > 0 {
        blocks1 as f64 / total
    } else {
        f64::NAN
    };
    let h_value = total / n;
    let (c1, c2) = config.costs.rates(config.p1);
    let tau_bar = config
        .tau_bar
        .unwrap_or(crate::payoff::DEFAULT_TARGET_MINUTES);

    let rate = |f: &dyn Fn(&Batch) -> f64| -> f64 {
        batch_se(&batches.iter().map(|b| f(b) / b.turns).collect::<Vec<_>>())
    };
    // Delta method for the ratio Σr1/ΣD: residuals r1 − Ĝ1·D per batch.
    let share_se = rate(&|b| b.r1 - g1_value * (b.r1 + b.r2)) / h_value;

    let mut sorted: Vec<(State, u64)> = visits.into_iter().collect();
    sorted.sort_by_key(|(s, _)| (s.level(), s.l1));
    let visits = sorted
        .into_iter()
        .map(|(state, c)| Visit {
            state,
            frequency: c as f64 / n,
        })
        .collect();

    let time = config.tau_bar.map(|t| {
        let tau_b = h_value * t;
        let minutes = unit_time * tau_b;
        TimeStats {
            tau_b,
            minutes,
            minutes_per_block: minutes / total,
            r1: (blocks1 as f64 - c1 * minutes) / n,
            r2: (blocks2 as f64 - c2 * minutes) / n,
        }
    });

    Ok(SimStats {
        turns: config.turns,
        seed: config.seed,
        depth,
        blocks1,
        blocks2,
        blocks,
        rounds,
        forced,
        g1: Estimate {
            value: g1_value,
            se: share_se,
        },
        g2: Estimate {
            value: 1.0 - g1_value,
            se: share_se,
        },
        g1_verbatim: blocks1 as f64 / (1.0 + total),
        g2_verbatim: blocks2 as f64 / (1.0 + total),
        rho1: Estimate {
            value: blocks1 as f64 / n,
            se: rate(&|b| b.r1),
        },
        rho2: Estimate {
            value: blocks2 as f64 / n,
            se: rate(&|b| b.r2),
        },
        h: Estimate {
            value: h_value,
            se: rate(&|b| b.r1 + b.r2),
        },
        r1: Estimate {
            value: (blocks1 as f64 - c1 * tau_bar * total) / n,
            se: rate(&|b| b.r1 - c1 * tau_bar * (b.r1 + b.r2)),
        },
        r2: Estimate {
            value: (blocks2 as f64 - c2 * tau_bar * total) / n,
            se: rate(&|b| b.r2 - c2 * tau_bar * (b.r1 + b.r2)),
        },
        visits,
        time,
        hitting_turn,
    })
}

/// Standard error of the mean of batch means.
fn batch_se(means: &[f64]) -> f64 {
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingSample {
    pub turns: u64,
    /// The budget ran out before the target was reached.
    pub censored: bool,
}

/// Independent first-passage times from the origin to
/// `config.record_hitting`, each capped at `budget` turns.
pub fn hitting_samples(
    config: &SimConfig,
    replications: usize,
    budget: u64,
) -> Result<Vec<HittingSample>> {
    let depth = config.check()?;
    let target = config
        .record_hitting
        .ok_or_else(|| Error::InvalidParameter("no hitting target configured".into()))?;
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, FIRST_REPLICATION_STREAM + r);
            let mut at = State::origin();
            let mut n = 0;
            while at != target {
                if n == budget {
                    return Ok(HittingSample {
                        turns: n,
                        censored: true,
                    });
                }
                at = step(config, at, draw_winner(&mut rng, config.p1), depth)?.next;
                n += 1;
            }
            Ok(HittingSample {
                turns: n,
                censored: false,
            })
        })
        .collect()
}

/// Mean and standard error of the uncensored samples.
pub fn hitting_mean(samples: &[HittingSample]) -> Option<Estimate> {
    let xs: Vec<f64> = samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.turns as f64)
        .collect();
    if xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some(Estimate {
        value: mean,
        se: (var / k).sqrt(),
    })
}
