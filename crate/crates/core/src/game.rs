//! Rules of the two-player immediate-release mining game.
//!
//! A configuration is the pair `(l1, l2)` of branch lengths measured from the
//! last block both players agree on. Each turn exactly one player wins the
//! mining race. The loser either keeps mining its own branch or, if its policy
//! says so, capitulates: it abandons its branch and restarts on the winner's
//! branch, leaving `s` of the winner's blocks still to surpass. The winner of
//! that round then collects every block of its branch except those `s`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::policy::CapitulationPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct State {
    pub l1: u32,
    pub l2: u32,
}

impl State {
    pub const fn new(l1: u32, l2: u32) -> Self {
        Self { l1, l2 }
    }

    pub const fn origin() -> Self {
        Self { l1: 0, l2: 0 }
    }

    /// Number of blocks mined since the last common block.
    pub const fn level(self) -> u32 {
        self.l1 + self.l2
    }

    /// `l2 - l1`, i.e. how far player 1 is behind.
    pub fn gap(self) -> i64 {
        i64::from(self.l2) - i64::from(self.l1)
    }

    pub const fn swapped(self) -> Self {
        Self {
            l1: self.l2,
            l2: self.l1,
        }
    }
}

impl From<(u32, u32)> for State {
    fn from((l1, l2): (u32, u32)) -> Self {
        Self { l1, l2 }
    }
}

impl From<State> for (u32, u32) {
    fn from(s: State) -> Self {
        (s.l1, s.l2)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.l1, self.l2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const fn other(self) -> Self {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub const fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

impl TryFrom<u8> for Player {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            other => Err(format!("player must be 1 or 2, got {other}")),
        }
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        match p {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// What a player does at a configuration if it loses the race there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Continue,
    CapitulateIfLose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// Both branches survive; one of them grows by a block.
    Interior,
    /// The loser capitulates because its policy says so.
    Capitulation,
    /// The winner's branch outgrew the truncation depth, so the loser must
    /// recognise it as validated.
    ForcedCapitulation,
}

impl MoveKind {
    pub const fn ends_round(self) -> bool {
        !matches!(self, MoveKind::Interior)
    }
}

/// Outcome of one mining race.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub next: State,
    pub winner: Player,
    pub kind: MoveKind,
    /// Blocks validated for the winner. Zero for interior moves; may be
    /// non-positive only for infeasible restart depths.
    pub reward: i64,
}

impl Move {
    /// Rewards as `(player 1, player 2)` block counts.
    pub fn rewards(&self) -> (i64, i64) {
        match self.winner {
            Player::One => (self.reward, 0),
            Player::Two => (0, self.reward),
        }
    }
}

/// Restart configuration after `loser` capitulates.
pub fn restart_state(policies: [&CapitulationPolicy; 2], loser: Player) -> State {
    match loser {
        Player::One => State::new(0, policies[0].restart()),
        Player::Two => State::new(policies[1].restart(), 0),
    }
}

/// Applies one mining race won by `winner` at `at`, with branches truncated at
/// `depth`.
pub fn play(policies: [&CapitulationPolicy; 2], at: State, winner: Player, depth: u32) -> Move {
    let loser = winner.other();
    let loser_policy = policies[loser.index()];
    let (own, grown) = match winner {
        Player::One => (at.l1, State::new(at.l1 + 1, at.l2)),
        Player::Two => (at.l2, State::new(at.l1, at.l2 + 1)),
    };
    let kind = if loser_policy.decide(at) == Decision::CapitulateIfLose {
        MoveKind::Capitulation
    } else if own + 1 > depth {
        MoveKind::ForcedCapitulation
    } else {
        MoveKind::Interior
    };
    match kind {
        MoveKind::Interior => Move {
            next: grown,
            winner,
            kind,
            reward: 0,
        },
        _ => Move {
            next: restart_state(policies, loser),
            winner,
            kind,
            reward: i64::from(own) + 1 - i64::from(loser_policy.restart()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{make_constant_gap, make_frontier, Depth};

    #[test]
    fn frontier_pair_stays_at_origin() {
        let a = make_frontier(Depth::Bounded(4), Player::One);
        let b = make_frontier(Depth::Bounded(4), Player::Two);
        let one = play([&a, &b], State::origin(), Player::One, 4);
        let two = play([&a, &b], State::origin(), Player::Two, 4);
        assert_eq!(one.next, State::origin());
        assert_eq!(one.rewards(), (1, 0));
        assert_eq!(two.next, State::origin());
        assert_eq!(two.rewards(), (0, 1));
    }

    #[test]
    fn gap_policy_capitulates_on_band_edge() {
        let a = make_constant_gap(2, 1, Depth::Unbounded).unwrap();
        let b = make_frontier(Depth::Unbounded, Player::Two);
        let m = play([&a, &b], State::new(3, 5), Player::Two, 100);
        assert_eq!(m.kind, MoveKind::Capitulation);
        assert_eq!(m.next, State::new(0, 1));
        // five blocks plus the new one, minus the one left to surpass
        assert_eq!(m.rewards(), (0, 5));
        let m = play([&a, &b], State::new(3, 4), Player::Two, 100);
        assert_eq!(m.kind, MoveKind::Interior);
        assert_eq!(m.next, State::new(3, 5));
    }

    #[test]
    fn truncation_forces_capitulation() {
        let a = make_constant_gap(3, 0, Depth::Unbounded).unwrap();
        let b = make_frontier(Depth::Unbounded, Player::Two);
        let m = play([&a, &b], State::new(4, 5), Player::Two, 5);
        assert_eq!(m.kind, MoveKind::ForcedCapitulation);
        assert_eq!(m.next, State::origin());
        assert_eq!(m.rewards(), (0, 6));
    }
}
