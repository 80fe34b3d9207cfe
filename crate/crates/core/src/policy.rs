//! Capitulation policies and their named families.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::build_chain;
use crate::error::{Error, Result};
use crate::game::{play, restart_state, Decision, MoveKind, Player, State};

/// Depth used to scan and explore policies that have no finite depth.
pub const UNBOUNDED_SCAN_DEPTH: u32 = 128;
/// Truncation used by [`gap_profile`] when neither policy is bounded.
pub const UNBOUNDED_PROFILE_DEPTH: u32 = 200;

/// Maximum branch length a player is willing to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Depth {
    Bounded(u32),
    Unbounded,
}

impl Depth {
    pub fn bounded(self) -> Option<u32> {
        match self {
            Depth::Bounded(d) => Some(d),
            Depth::Unbounded => None,
        }
    }

    pub fn admits(self, n: u32) -> bool {
        self.bounded().is_none_or(|d| n <= d)
    }

    /// Tightest finite depth among `depths`, if any is finite.
    pub fn common(depths: &[Depth]) -> Option<u32> {
        depths.iter().filter_map(|d| d.bounded()).min()
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Bounded(d) => write!(f, "{d}"),
            Depth::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Depth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Depth::Bounded(d) => s.serialize_u32(*d),
            Depth::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Depth {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Word(String),
        }
        match Raw::deserialize(de)? {
            Raw::Int(d) => Ok(Depth::Bounded(d)),
            Raw::Word(w) if w == "unbounded" => Ok(Depth::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "depth must be an integer or \"unbounded\", got {w:?}"
            ))),
        }
    }
}

impl std::str::FromStr for Depth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("unbounded") || s == "inf" {
            return Ok(Depth::Unbounded);
        }
        s.parse::<u32>()
            .map(Depth::Bounded)
            .map_err(|_| Error::InvalidParameter(format!("bad depth {s:?}")))
    }
}

/// How the capitulation map is represented.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Player 1 capitulates once player 2 is `g` or more blocks ahead.
    ConstantGap { g: u32 },
    /// Capitulate as soon as the opponent's branch is at least as long.
    Frontier { player: Player },
    /// Player 1 only capitulates when player 2's branch has length `d`.
    SlowMixing { d: u32 },
    /// Row-major `(d+1)×(d+1)` table indexed by `(l1, l2)`; `true` means
    /// capitulate. States beyond the table capitulate.
    Table { d: u32, capitulate: Vec<bool> },
}

/// A player's continue/capitulate map together with its restart depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyJson", into = "PolicyJson")]
pub struct CapitulationPolicy {
    depth: Depth,
    restart: u32,
    rule: Rule,
}

impl CapitulationPolicy {
    pub fn depth(&self) -> Depth {
        self.depth
    }

    /// Restart depth `s`: opponent blocks left to surpass after capitulating.
    pub fn restart(&self) -> u32 {
        self.restart
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Gap parameter for constant-gap policies.
    pub fn constant_gap(&self) -> Option<u32> {
        match self.rule {
            Rule::ConstantGap { g } => Some(g),
            _ => None,
        }
    }

    pub fn is_frontier_for(&self, player: Player) -> bool {
        matches!(self.rule, Rule::Frontier { player: p } if p == player) && self.restart == 0
    }

    pub fn decide(&self, at: State) -> Decision {
        let capitulate = match &self.rule {
            Rule::ConstantGap { g } => at.gap() >= i64::from(*g),
            Rule::Frontier {
                player: Player::One,
            } => at.l2 >= at.l1,
            Rule::Frontier {
                player: Player::Two,
            } => at.l1 >= at.l2,
            Rule::SlowMixing { d } => at.l2 == *d,
            Rule::Table { d, capitulate } => {
                if at.l1 > *d || at.l2 > *d {
                    true
                } else {
                    capitulate[table_index(*d, at)]
                }
            }
        };
        if capitulate {
            Decision::CapitulateIfLose
        } else {
            Decision::Continue
        }
    }

    /// Builds a tabulated policy from an explicit decision function.
    pub fn from_fn(d: u32, restart: u32, f: impl Fn(State) -> Decision) -> Result<Self> {
        let n = d as usize + 1;
        let mut capitulate = vec![false; n * n];
        for l1 in 0..=d {
            for l2 in 0..=d {
                let at = State::new(l1, l2);
                capitulate[table_index(d, at)] = f(at) == Decision::CapitulateIfLose;
            }
        }
        Self::from_table(d, restart, capitulate)
    }

    pub fn from_table(d: u32, restart: u32, capitulate: Vec<bool>) -> Result<Self> {
        let n = d as usize + 1;
        if capitulate.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "table for depth {d} needs {} entries, got {}",
                n * n,
                capitulate.len()
            )));
        }
        check_restart(restart, Depth::Bounded(d))?;
        Ok(Self {
            depth: Depth::Bounded(d),
            restart,
            rule: Rule::Table { d, capitulate },
        })
    }

    /// Dense 0/1 table over `0..=d` in both coordinates.
    pub fn to_table(&self, d: u32) -> Vec<bool> {
        let mut out = Vec::with_capacity((d as usize + 1).pow(2));
        for l1 in 0..=d {
            for l2 in 0..=d {
                out.push(self.decide(State::new(l1, l2)) == Decision::CapitulateIfLose);
            }
        }
        out
    }

    /// Depth used for exhaustive scans of this policy.
    fn scan_depth(&self) -> u32 {
        self.depth.bounded().unwrap_or(UNBOUNDED_SCAN_DEPTH)
    }
}

fn table_index(d: u32, at: State) -> usize {
    at.l1 as usize * (d as usize + 1) + at.l2 as usize
}

fn check_restart(s: u32, depth: Depth) -> Result<()> {
    if depth.admits(s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "restart depth {s} exceeds policy depth {depth}"
        )))
    }
}

/// Player 1 capitulates whenever player 2 leads by `g` or more.
pub fn make_constant_gap(g: u32, s: u32, d: Depth) -> Result<CapitulationPolicy> {
    if g == 0 {
        return Err(Error::InvalidParameter("gap must be at least 1".into()));
    }
    if !d.admits(g) {
        return Err(Error::InvalidParameter(format!(
            "gap {g} exceeds policy depth {d}"
        )));
    }
    if s > g {
        return Err(Error::RestartAboveGap { g, s });
    }
    Ok(CapitulationPolicy {
        depth: d,
        restart: s,
        rule: Rule::ConstantGap { g },
    })
}

pub fn make_frontier(d: Depth, player: Player) -> CapitulationPolicy {
    CapitulationPolicy {
        depth: d,
        restart: 0,
        rule: Rule::Frontier { player },
    }
}

/// Player-1 policy that restarts `d` blocks behind and gives up only when the
/// opponent's branch reaches `d`.
pub fn make_slow_mixing(d: u32) -> Result<CapitulationPolicy> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "slow-mixing depth must be ≥ 1".into(),
        ));
    }
    Ok(CapitulationPolicy {
        depth: Depth::Bounded(d),
        restart: d,
        rule: Rule::SlowMixing { d },
    })
}

/// Random rational player-1 policy of depth `d`: each row capitulates once
/// the opponent's branch reaches a random threshold no lower than the
/// restart depth, so every capitulation pays the winner at least one block.
pub fn random_rational<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: u32,
    restart: u32,
) -> Result<CapitulationPolicy> {
    if d == 0 || restart > d {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= d and restart <= d, got d={d}, restart={restart}"
        )));
    }
    let thresholds: Vec<u32> = (0..=d).map(|_| rng.random_range(restart..=d + 1)).collect();
    CapitulationPolicy::from_fn(d, restart, |at| {
        if at.l2 >= thresholds[at.l1 as usize] {
            Decision::CapitulateIfLose
        } else {
            Decision::Continue
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapProfile {
    /// Largest gap `l2 - l1 >= 0` in each row `l1` with a Continue decision,
    /// or -1 if the row capitulates at every nonnegative gap.
    pub per_row: Vec<i64>,
    /// Largest `l2 - l1` over the reachable states.
    pub max_gap: i64,
    /// Depth the profile was computed at.
    pub depth: u32,
    /// The restart depth exceeds `max_gap`, so the restart state sits on or
    /// beyond the capitulation frontier.
    pub restart_above_gap: bool,
}

/// Gap tolerance of `policy` (as player 1) against `opponent`.
pub fn gap_profile(
    policy: &CapitulationPolicy,
    opponent: &CapitulationPolicy,
    p1: f64,
) -> Result<GapProfile> {
    let depth = Depth::common(&[policy.depth, opponent.depth]).unwrap_or(UNBOUNDED_PROFILE_DEPTH);
    let per_row = (0..=depth)
        .map(|l1| {
            (l1..=depth)
                .rev()
                .find(|&l2| policy.decide(State::new(l1, l2)) == Decision::Continue)
                .map_or(-1, |l2| i64::from(l2 - l1))
        })
        .collect();
    let chain = build_chain(policy, opponent, p1, depth)?;
    let max_gap = chain
        .states()
        .iter()
        .map(|s| s.gap())
        .max()
        .expect("chains are never empty");
    Ok(GapProfile {
        per_row,
        max_gap,
        depth,
        restart_above_gap: i64::from(policy.restart) > max_gap,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// In the given row a Continue follows a capitulation as the opponent's
    /// branch grows.
    Irrational {
        player: Player,
        row: u32,
        at: State,
    },
    /// Capitulating here would hand the winner a non-positive reward.
    NonPositiveReward {
        player: Player,
        at: State,
        reward: i64,
    },
    RestartBeyondDepth {
        player: Player,
        restart: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Irrational { player, row, at } => write!(
                f,
                "player {player} continues at {at} after capitulating earlier in row {row}"
            ),
            Violation::NonPositiveReward { player, at, reward } => write!(
                f,
                "player {player} capitulating at {at} yields winner reward {reward}"
            ),
            Violation::RestartBeyondDepth { player, restart } => {
                write!(
                    f,
                    "player {player} restart depth {restart} exceeds its depth"
                )
            }
        }
    }
}

/// Checks rationality of both policies and feasibility of every reachable
/// capitulation. An empty result means the pair is valid.
pub fn validate(policy1: &CapitulationPolicy, policy2: &CapitulationPolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    for (player, policy) in [(Player::One, policy1), (Player::Two, policy2)] {
        if !policy.depth.admits(policy.restart) {
            out.push(Violation::RestartBeyondDepth {
                player,
                restart: policy.restart,
            });
        }
        out.extend(rationality_violations(policy, player));
    }
    let depth = Depth::common(&[policy1.depth, policy2.depth]).unwrap_or(UNBOUNDED_SCAN_DEPTH);
    out.extend(reward_violations([policy1, policy2], depth));
    out
}

/// One violation per row whose Continue set is not closed downwards in the
/// opponent's branch length.
pub fn rationality_violations(policy: &CapitulationPolicy, owner: Player) -> Vec<Violation> {
    let d = policy.scan_depth();
    let mut out = Vec::new();
    for row in 0..=d {
        let mut capitulated = false;
        for other in 0..=d {
            let at = match owner {
                Player::One => State::new(row, other),
                Player::Two => State::new(other, row),
            };
            match policy.decide(at) {
                Decision::CapitulateIfLose => capitulated = true,
                Decision::Continue if capitulated => {
                    out.push(Violation::Irrational {
                        player: owner,
                        row,
                        at,
                    });
                    break;
                }
                Decision::Continue => {}
            }
        }
    }
    out
}

fn reward_violations(policies: [&CapitulationPolicy; 2], depth: u32) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for loser in [Player::One, Player::Two] {
        let start = restart_state(policies, loser);
        if start.l1.max(start.l2) <= depth && seen.insert(start) {
            queue.push_back(start);
        }
    }
    while let Some(at) = queue.pop_front() {
        for winner in [Player::One, Player::Two] {
            let mv = play(policies, at, winner, depth);
            if mv.kind == MoveKind::Capitulation && mv.reward <= 0 {
                out.push(Violation::NonPositiveReward {
                    player: winner.other(),
                    at,
                    reward: mv.reward,
                });
            }
            if mv.next.l1.max(mv.next.l2) <= depth && seen.insert(mv.next) {
                queue.push_back(mv.next);
            }
        }
    }
    out
}

/// JSON form: `{kind, g?, s, d, table?, player?}` with `table` row-major 0/1.
#[derive(Serialize, Deserialize)]
struct PolicyJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<u32>,
    s: u32,
    d: Depth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    player: Option<Player>,
}

impl From<CapitulationPolicy> for PolicyJson {
    fn from(p: CapitulationPolicy) -> Self {
        let mut out = PolicyJson {
            kind: String::new(),
            g: None,
            s: p.restart,
            d: p.depth,
            table: None,
            player: None,
        };
        match p.rule {
            Rule::ConstantGap { g } => {
                out.kind = "constant_gap".into();
                out.g = Some(g);
            }
            Rule::Frontier { player } => {
                out.kind = "frontier".into();
                out.player = Some(player);
            }
            Rule::SlowMixing { .. } => out.kind = "slow_mixing".into(),
            Rule::Table { capitulate, .. } => {
                out.kind = "table".into();
                out.table = Some(capitulate.into_iter().map(u8::from).collect());
            }
        }
        out
    }
}

impl TryFrom<PolicyJson> for CapitulationPolicy {
    type Error = Error;

    fn try_from(j: PolicyJson) -> Result<Self> {
        let need_bounded = |what: &str| {
            j.d.bounded()
                .ok_or_else(|| Error::InvalidParameter(format!("{what} policy needs a finite d")))
        };
        let policy = match j.kind.as_str() {
            "constant_gap" => {
                let g =
                    j.g.ok_or_else(|| Error::InvalidParameter("constant_gap needs g".into()))?;
                make_constant_gap(g, j.s, j.d)?
            }
            "frontier" => {
                if j.s != 0 {
                    return Err(Error::InvalidParameter("frontier restarts at s=0".into()));
                }
                make_frontier(j.d, j.player.unwrap_or(Player::Two))
            }
            "slow_mixing" => {
                let d = need_bounded("slow_mixing")?;
                if j.s != d {
                    return Err(Error::InvalidParameter(
                        "slow_mixing restarts at s=d".into(),
                    ));
                }
                make_slow_mixing(d)?
            }
            "table" => {
                let d = need_bounded("table")?;
                let raw = j
                    .table
                    .ok_or_else(|| Error::InvalidParameter("table policy needs table".into()))?;
                if raw.iter().any(|&v| v > 1) {
                    return Err(Error::InvalidParameter(
                        "table entries must be 0 or 1".into(),
                    ));
                }
                CapitulationPolicy::from_table(d, j.s, raw.into_iter().map(|v| v == 1).collect())?
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown policy kind {other:?}"
                )))
            }
        };
        Ok(policy)
    }
}
