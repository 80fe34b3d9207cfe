//! The finite Markov chain induced by a pair of capitulation policies.
//!
//! Every interior move raises `l1 + l2` by one and every round-ending move
//! lands on one of at most two restart states. The solvers below exploit that
//! layered structure: the stationary law and the per-round hit probabilities
//! come from a single sweep over the states in level order.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::game::{play, restart_state, Move, MoveKind, Player, State};
use crate::policy::{validate, CapitulationPolicy};

/// Largest admissible stationarity residual `‖πP − π‖∞`.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;
/// Relative residual allowed for the hitting-time linear solve.
pub const HITTING_TOLERANCE: f64 = 1e-8;

/// What happens when a branch would outgrow the truncation depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    /// The loser recognises the over-long branch, as if it had capitulated.
    #[default]
    Forced,
    /// Building fails with [`Error::EscapesDepth`].
    Reject,
}

/// One outgoing transition: the race at `from` is won by `winner`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub winner: Player,
    pub prob: f64,
    pub kind: MoveKind,
    /// Blocks validated for `(player 1, player 2)`.
    pub rewards: (i64, i64),
}

#[derive(Clone, Debug)]
pub struct MiningChain {
    states: Vec<State>,
    index: HashMap<State, usize>,
    /// Per state, the outcome of a player-1 win and of a player-2 win.
    moves: Vec<[Move; 2]>,
    next: Vec<[usize; 2]>,
    p: [f64; 2],
    restarts: [u32; 2],
    depth: u32,
    touches_cap: bool,
    player2_frontier: bool,
}

impl MiningChain {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: State) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn p1(&self) -> f64 {
        self.p[0]
    }

    pub fn p2(&self) -> f64 {
        self.p[1]
    }

    pub fn win_probability(&self, player: Player) -> f64 {
        self.p[player.index()]
    }

    /// Restart depth of `player`.
    pub fn restart(&self, player: Player) -> u32 {
        self.restarts[player.index()]
    }

    /// Truncation depth actually used (never above a bounded policy depth).
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Whether some transition was a forced capitulation at the truncation
    /// depth, i.e. the policies alone would have let a branch grow further.
    pub fn touches_cap(&self) -> bool {
        self.touches_cap
    }

    pub fn player2_frontier(&self) -> bool {
        self.player2_frontier
    }

    /// `(s2, 0)`: where play resumes after player 2 capitulates.
    pub fn start1(&self) -> State {
        State::new(self.restarts[1], 0)
    }

    /// `(0, s1)`: where play resumes after player 1 capitulates.
    pub fn start2(&self) -> State {
        State::new(0, self.restarts[0])
    }

    /// Outcome of the race at state `i` won by `winner`.
    pub fn outcome(&self, i: usize, winner: Player) -> &Move {
        &self.moves[i][winner.index()]
    }

    pub fn edge(&self, i: usize, winner: Player) -> Edge {
        let mv = &self.moves[i][winner.index()];
        Edge {
            from: i,
            to: self.next[i][winner.index()],
            winner,
            prob: self.p[winner.index()],
            kind: mv.kind,
            rewards: mv.rewards(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.len()).flat_map(move |i| [Player::One, Player::Two].map(|w| self.edge(i, w)))
    }

    /// Nonzero entries of row `i`; coinciding successors are merged.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let [a, b] = self.next[i];
        if a == b {
            vec![(a, 1.0)]
        } else {
            vec![(a, self.p[0]), (b, self.p[1])]
        }
    }

    /// States where a win by `player` ends the round (the opponent
    /// capitulates, voluntarily or at the truncation depth).
    pub fn boundary(&self, player: Player) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.moves[i][player.index()].kind.ends_round())
            .collect()
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.row(i) {
                m[(i, j)] += w;
            }
        }
        m
    }

    /// `out = v P`.
    pub fn step(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let [p1, p2] = self.p;
        for (i, &m) in v.iter().enumerate() {
            if m != 0.0 {
                let [a, b] = self.next[i];
                out[a] += m * p1;
                out[b] += m * p2;
            }
        }
    }

    /// Strong connectivity of the transition digraph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut rev = vec![Vec::new(); n];
        for (i, &[a, b]) in self.next.iter().enumerate() {
            rev[a].push(i);
            rev[b].push(i);
        }
        let fwd: Vec<Vec<usize>> = self.next.iter().map(|r| r.to_vec()).collect();
        let covers = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        covers(&fwd) && covers(&rev)
    }

    pub fn to_dump(&self) -> ChainDump {
        ChainDump {
            p1: self.p[0],
            depth: self.depth,
            restarts: self.restarts,
            touches_cap: self.touches_cap,
            states: self.states.clone(),
            edges: self
                .edges()
                .map(|e| EdgeDump {
                    from: self.states[e.from],
                    to: self.states[e.to],
                    winner: e.winner,
                    prob: e.prob,
                    kind: e.kind,
                    rewards: e.rewards,
                })
                .collect(),
        }
    }

    /// Graphviz rendering; round-ending edges are dashed and labelled with
    /// their reward.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph mining_chain {\n  rankdir=LR;\n");
        for s in &self.states {
            let _ = writeln!(out, "  \"{s}\";");
        }
        for e in self.edges() {
            let (from, to) = (self.states[e.from], self.states[e.to]);
            if e.kind == MoveKind::Interior {
                let _ = writeln!(out, "  \"{from}\" -> \"{to}\" [label=\"p{}\"];", e.winner);
            } else {
                let _ = writeln!(
                    out,
                    "  \"{from}\" -> \"{to}\" [style=dashed, label=\"p{} r=({},{})\"];",
                    e.winner, e.rewards.0, e.rewards.1
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainDump {
    pub p1: f64,
    pub depth: u32,
    pub restarts: [u32; 2],
    pub touches_cap: bool,
    pub states: Vec<State>,
    pub edges: Vec<EdgeDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeDump {
    pub from: State,
    pub to: State,
    pub winner: Player,
    pub prob: f64,
    pub kind: MoveKind,
    pub rewards: (i64, i64),
}

/// Builds the chain with forced capitulation at the truncation depth.
pub fn build_chain(
    policy1: &CapitulationPolicy,
    policy2: &CapitulationPolicy,
    p1: f64,
    depth: u32,
) -> Result<MiningChain> {
    build_chain_with(policy1, policy2, p1, depth, Boundary::Forced)
}

pub fn build_chain_with(
    policy1: &CapitulationPolicy,
    policy2: &CapitulationPolicy,
    p1: f64,
    depth: u32,
    boundary: Boundary,
) -> Result<MiningChain> {
    check_probability(p1)?;
    let restarts = [policy1.restart(), policy2.restart()];
    let depth = [policy1.depth(), policy2.depth()]
        .iter()
        .filter_map(|d| d.bounded())
        .fold(depth, u32::min);
    if restarts[0].max(restarts[1]) > depth {
        return Err(Error::InvalidParameter(format!(
            "truncation depth {depth} is below a restart depth {restarts:?}"
        )));
    }
    let violations = validate(policy1, policy2);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::InvalidPolicies(text.join("; ")));
    }

    let policies = [policy1, policy2];
    let cap = match boundary {
        Boundary::Forced => depth,
        Boundary::Reject => u32::MAX - 1,
    };
    let mut index = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for loser in [Player::One, Player::Two] {
        let s = restart_state(policies, loser);
        if index.insert(s, order.len()).is_none() {
            order.push(s);
            queue.push_back(s);
        }
    }
    let mut raw_moves = HashMap::new();
    let mut touches_cap = false;
    while let Some(at) = queue.pop_front() {
        let moves = [Player::One, Player::Two].map(|w| play(policies, at, w, cap));
        for mv in &moves {
            touches_cap |= mv.kind == MoveKind::ForcedCapitulation;
            if mv.next.l1.max(mv.next.l2) > depth {
                return Err(Error::EscapesDepth {
                    state: mv.next,
                    depth,
                });
            }
            if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(mv.next) {
                slot.insert(order.len());
                order.push(mv.next);
                queue.push_back(mv.next);
            }
        }
        raw_moves.insert(at, moves);
    }

    let mut states = order;
    states.sort_by_key(|s| (s.level(), s.l1));
    let index: HashMap<State, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let moves: Vec<[Move; 2]> = states.iter().map(|s| raw_moves[s]).collect();
    let next = moves
        .iter()
        .map(|m| [index[&m[0].next], index[&m[1].next]])
        .collect();
    Ok(MiningChain {
        states,
        index,
        moves,
        next,
        p: [p1, 1.0 - p1],
        restarts,
        depth,
        touches_cap,
        player2_frontier: policy2.is_frontier_for(Player::Two),
    })
}

/// Probability vector over the states of a chain, in chain order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn at(&self, chain: &MiningChain, s: State) -> Option<f64> {
        chain.index_of(s).map(|i| self.0[i])
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// `‖vP − v‖∞`.
pub fn stationarity_residual(chain: &MiningChain, v: &[f64]) -> f64 {
    let mut out = vec![0.0; v.len()];
    chain.step(v, &mut out);
    out.iter()
        .zip(v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution by level propagation.
///
/// A round started at a restart state visits every state at most once, so
/// the visit probabilities from each restart state follow from one forward
/// sweep. The stationary mass of the two restart states is then fixed by
/// the flow balance between them, written with escape probabilities only so
/// that no cancellation occurs.
pub fn stationary(chain: &MiningChain) -> Result<Distribution> {
    let n = chain.len();
    let starts = [chain.start1(), chain.start2()].map(|s| chain.index[&s]);
    let is_start = |j: usize| j == starts[0] || j == starts[1];

    // visits[k][x]: probability that a round from starts[k] passes x;
    // back[k][j]: probability that it ends on starts[j].
    let mut visits = [vec![0.0; n], vec![0.0; n]];
    let mut back = [[0.0; 2]; 2];
    for k in 0..2 {
        let u = &mut visits[k];
        u[starts[k]] = 1.0;
        for i in 0..n {
            let m = u[i];
            if m == 0.0 {
                continue;
            }
            for w in 0..2 {
                let to = chain.next[i][w];
                let mass = m * chain.p[w];
                if is_start(to) {
                    back[k][usize::from(to != starts[0])] += mass;
                } else {
                    u[to] += mass;
                }
            }
        }
    }
    let weight = if starts[0] == starts[1] {
        [1.0, 0.0]
    } else {
        [back[1][0], back[0][1]]
    };
    let mut pi: Vec<f64> = (0..n)
        .map(|i| weight[0] * visits[0][i] + weight[1] * visits[1][i])
        .collect();
    let total: f64 = pi.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFinite("stationary normalisation"));
    }
    pi.iter_mut().for_each(|x| *x /= total);
    let residual = stationarity_residual(chain, &pi);
    if residual > STATIONARY_TOLERANCE {
        return Err(Error::Residual {
            residual,
            tolerance: STATIONARY_TOLERANCE,
        });
    }
    Ok(Distribution(pi))
}

/// Stationary distribution from a dense LU solve, replacing one balance
/// equation by the normalisation. Cubic in the state count; meant as an
/// oracle for [`stationary`].
pub fn stationary_dense(chain: &MiningChain) -> Result<Distribution> {
    let n = chain.len();
    let mut a = chain.dense_matrix().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or(Error::NonFinite("singular stationary system"))?;
    let pi: Vec<f64> = x.iter().copied().collect();
    let residual = stationarity_residual(chain, &pi);
    if residual > STATIONARY_TOLERANCE {
        return Err(Error::Residual {
            residual,
            tolerance: STATIONARY_TOLERANCE,
        });
    }
    Ok(Distribution(pi))
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact `t_mix(eps)`: least `n` with every row of `Pⁿ` within `eps` of `π`
/// in total variation. Fails once `budget` steps do not suffice.
pub fn exact_mixing_time(chain: &MiningChain, eps: f64, budget: u64) -> Result<u64> {
    Ok(mixing_times(chain, &[eps], budget)?[0])
}

/// [`exact_mixing_time`] for several tolerances in one pass.
///
/// The distance of each row to `π` is nonincreasing in `n`, so every row can
/// be iterated on its own until it meets the smallest tolerance and the
/// answer is the maximum over rows of the first crossing times.
pub fn mixing_times(chain: &MiningChain, eps: &[f64], budget: u64) -> Result<Vec<u64>> {
    if let Some(&e) = eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "mixing tolerance must lie in (0, 1), got {e}"
        )));
    }
    let pi = stationary(chain)?;
    let pi = pi.as_slice();
    let rows: Vec<Result<Vec<u64>>> = (0..chain.len())
        .into_par_iter()
        .map(|start| row_crossings(chain, pi, start, eps, budget))
        .collect();
    let mut out = vec![0u64; eps.len()];
    for r in rows {
        for (o, t) in out.iter_mut().zip(r?) {
            *o = (*o).max(t);
        }
    }
    Ok(out)
}

fn row_crossings(
    chain: &MiningChain,
    pi: &[f64],
    start: usize,
    eps: &[f64],
    budget: u64,
) -> Result<Vec<u64>> {
    let n = chain.len();
    let mut v = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    v[start] = 1.0;
    let mut hit: Vec<Option<u64>> = vec![None; eps.len()];
    let mut steps = 0u64;
    loop {
        let d = total_variation(&v, pi);
        for (h, &e) in hit.iter_mut().zip(eps) {
            if h.is_none() && d <= e {
                *h = Some(steps);
            }
        }
        if hit.iter().all(Option::is_some) {
            return Ok(hit.into_iter().map(|h| h.unwrap_or(0)).collect());
        }
        if steps >= budget {
            return Err(Error::BudgetExceeded {
                budget,
                distance: d,
            });
        }
        chain.step(&v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
        steps += 1;
    }
}

/// `max_m ‖Pⁿ(m,·) − π‖_TV` for `n = 0..=steps`.
pub fn tv_profile(chain: &MiningChain, steps: usize) -> Result<Vec<f64>> {
    let pi = stationary(chain)?;
    let pi = pi.as_slice();
    let n = chain.len();
    let per_row: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut v = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            v[start] = 1.0;
            let mut out = Vec::with_capacity(steps + 1);
            for _ in 0..=steps {
                out.push(total_variation(&v, pi));
                chain.step(&v, &mut scratch);
                std::mem::swap(&mut v, &mut scratch);
            }
            out
        })
        .collect();
    Ok((0..=steps)
        .map(|t| per_row.iter().map(|r| r[t]).fold(0.0, f64::max))
        .collect())
}

/// Expected number of turns to reach `target` from `from`; `+∞` when the
/// target is not a state of the chain.
pub fn expected_hitting_time(chain: &MiningChain, target: State, from: State) -> Result<f64> {
    let src = chain.index_of(from).ok_or(Error::UnknownState(from))?;
    let Some(dst) = chain.index_of(target) else {
        return Ok(f64::INFINITY);
    };
    if src == dst {
        return Ok(0.0);
    }
    let n = chain.len();
    // Unknowns are all states but the target, in chain order.
    let slot = |i: usize| if i < dst { i } else { i - 1 };
    let mut a = DMatrix::<f64>::identity(n - 1, n - 1);
    for i in (0..n).filter(|&i| i != dst) {
        for (j, w) in chain.row(i) {
            if j != dst {
                a[(slot(i), slot(j))] -= w;
            }
        }
    }
    let ones = DVector::from_element(n - 1, 1.0);
    let h = a
        .clone()
        .lu()
        .solve(&ones)
        .ok_or(Error::NonFinite("singular hitting system"))?;
    let scale = h.amax().max(1.0);
    let residual = (&a * &h - &ones).amax();
    if !residual.is_finite() || residual > HITTING_TOLERANCE * scale {
        return Err(Error::Residual {
            residual,
            tolerance: HITTING_TOLERANCE * scale,
        });
    }
    Ok(h[slot(src)])
}

/// Per-round outcome probabilities from one round-start state.
#[derive(Clone, Copy, Debug, PartialEq)]
struct RoundOutcome {
    hit: f64,
    /// Round ends without a hit and the next one starts at `(0,0)`.
    to_origin: f64,
    /// Round ends without a hit and the next one starts at `(0,s)`.
    to_restart: f64,
}

fn round_outcome(chain: &MiningChain, start: usize, target: usize) -> RoundOutcome {
    let origin = chain.index[&chain.start1()];
    let mut u = vec![0.0; chain.len()];
    u[start] = 1.0;
    let mut out = RoundOutcome {
        hit: 0.0,
        to_origin: 0.0,
        to_restart: 0.0,
    };
    // States are in level order and interior moves go up one level, so a
    // single sweep settles every state before it is expanded.
    for i in start..chain.len() {
        let m = u[i];
        if m == 0.0 {
            continue;
        }
        if i == target {
            out.hit += m;
            continue;
        }
        for w in 0..2 {
            let mass = m * chain.p[w];
            let to = chain.next[i][w];
            if chain.moves[i][w].kind.ends_round() {
                if to == origin {
                    out.to_origin += mass;
                } else {
                    out.to_restart += mass;
                }
            } else {
                u[to] += mass;
            }
        }
    }
    out
}

/// Expected number of rounds, started at `(0,0)`, until one passes through
/// `(d,d)`. Needs player 2 to play Frontier so that rounds restart at
/// `(0,0)` or `(0,s)` only.
pub fn exact_rounds_to_hit(chain: &MiningChain, d: u32) -> Result<f64> {
    if !chain.player2_frontier {
        return Err(Error::RoundDecompositionUnavailable);
    }
    let Some(target) = chain.index_of(State::new(d, d)) else {
        return Ok(f64::INFINITY);
    };
    let origin = chain.index[&chain.start1()];
    let restart = chain.index[&chain.start2()];
    let a = round_outcome(chain, origin, target);
    if origin == restart {
        return Ok(1.0 / a.hit);
    }
    let b = round_outcome(chain, restart, target);
    // E_x = 1 + q_x E_origin + w_x E_restart for x in {origin, restart}.
    let m = nalgebra::Matrix2::new(
        1.0 - a.to_origin,
        -a.to_restart,
        -b.to_origin,
        1.0 - b.to_restart,
    );
    let e = m
        .lu()
        .solve(&nalgebra::Vector2::new(1.0, 1.0))
        .ok_or(Error::NonFinite("singular round system"))?;
    if !e[0].is_finite() {
        return Err(Error::NonFinite("round system"));
    }
    Ok(e[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{make_constant_gap, make_frontier, make_slow_mixing, Depth};
    use approx::assert_relative_eq;

    fn frontier2() -> CapitulationPolicy {
        make_frontier(Depth::Unbounded, Player::Two)
    }

    fn gap_chain(g: u32, s: u32, p1: f64, depth: u32) -> MiningChain {
        let p = make_constant_gap(g, s, Depth::Unbounded).unwrap();
        build_chain(&p, &frontier2(), p1, depth).unwrap()
    }

    #[test]
    fn frontier_pair_is_a_single_self_loop() {
        let f1 = make_frontier(Depth::Bounded(3), Player::One);
        let c = build_chain(&f1, &frontier2(), 0.3, 3).unwrap();
        assert_eq!(c.states(), &[State::origin()]);
        assert_eq!(c.row(0), vec![(0, 1.0)]);
        assert_eq!(c.edge(0, Player::One).rewards, (1, 0));
        assert_eq!(c.edge(0, Player::Two).rewards, (0, 1));
        assert_eq!(stationary(&c).unwrap().as_slice(), &[1.0]);
        assert_eq!(exact_mixing_time(&c, 1e-3, 10).unwrap(), 0);
    }

    #[test]
    fn band_of_width_three() {
        let c = gap_chain(3, 0, 0.5, 6);
        let expected: Vec<State> = (0..=6)
            .flat_map(|l| (0..=3).map(move |k| State::new(l, l + k)))
            .filter(|s| s.l2 <= 6)
            .collect();
        let mut got = c.states().to_vec();
        got.sort();
        let mut want = expected;
        want.sort();
        assert_eq!(got, want);
        assert!(c.is_irreducible());
        // Capitulation edges into (0,0) pay player 2 its branch plus one.
        let i = c.index_of(State::new(1, 4)).unwrap();
        let e = c.edge(i, Player::Two);
        assert_eq!(c.states()[e.to], State::origin());
        assert_eq!(e.rewards, (0, 5));
        let j = c.index_of(State::new(2, 2)).unwrap();
        assert_eq!(c.edge(j, Player::One).rewards, (3, 0));
    }

    #[test]
    fn width_one_band_is_irreducible() {
        let c = gap_chain(1, 0, 0.5, 4);
        assert!(c.is_irreducible());
        assert!(c.states().iter().all(|s| s.gap() == 0 || s.gap() == 1));
    }

    #[test]
    fn rows_are_stochastic() {
        let c = gap_chain(3, 2, 0.35, 12);
        let m = c.dense_matrix();
        for i in 0..c.len() {
            assert!((m.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reject_mode_reports_escape() {
        let p = make_constant_gap(2, 0, Depth::Unbounded).unwrap();
        let err = build_chain_with(&p, &frontier2(), 0.5, 5, Boundary::Reject).unwrap_err();
        assert!(matches!(err, Error::EscapesDepth { depth: 5, .. }));
        assert!(gap_chain(2, 0, 0.5, 5).touches_cap());
    }

    #[test]
    fn level_propagation_matches_dense_solve() {
        for (g, s, p1) in [(1, 0, 0.5), (3, 2, 0.2), (4, 4, 0.8)] {
            let c = gap_chain(g, s, p1, 15);
            let a = stationary(&c).unwrap();
            let b = stationary_dense(&c).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
        let slow = make_slow_mixing(12).unwrap();
        let c = build_chain(&slow, &frontier2(), 0.8, 12).unwrap();
        let a = stationary(&c).unwrap();
        let b = stationary_dense(&c).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn g1_payoffs_at_half() {
        // Band of width one: rho1 = p1/((1+p2)(1-p1 p2)), here 4/9.
        let c = gap_chain(1, 0, 0.5, 200);
        let pi = stationary(&c).unwrap();
        let rho1: f64 = c
            .boundary(Player::One)
            .into_iter()
            .map(|i| pi.as_slice()[i] * 0.5 * c.edge(i, Player::One).rewards.0 as f64)
            .sum();
        assert_relative_eq!(rho1, 4.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn hitting_time_basics() {
        let c = gap_chain(1, 0, 0.5, 1);
        assert_eq!(
            expected_hitting_time(&c, State::origin(), State::origin()).unwrap(),
            0.0
        );
        // From (0,0): up to (0,1) w.p. 1/2 else back; from (0,1): to (1,1)
        // w.p. 1/2 else back. h0 = 1 + h0/2 + h1/2, h1 = 1 + h0/2 → h0 = 6.
        let h = expected_hitting_time(&c, State::new(1, 1), State::origin()).unwrap();
        assert_relative_eq!(h, 6.0, epsilon = 1e-12);
        assert_eq!(
            expected_hitting_time(&c, State::new(7, 7), State::origin()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn rounds_with_zero_restart_are_geometric() {
        // d=1, g=1: the only interior path (0,0)->(0,1)->(1,1) has
        // probability p1 p2, so E(R) = 1/(p1 p2) = 4.
        let c = gap_chain(1, 0, 0.5, 1);
        assert_relative_eq!(exact_rounds_to_hit(&c, 1).unwrap(), 4.0, epsilon = 1e-12);
        let p = make_constant_gap(1, 0, Depth::Unbounded).unwrap();
        let tabled = CapitulationPolicy::from_fn(4, 0, |s| frontier2().decide(s)).unwrap();
        let c = build_chain(&p, &tabled, 0.5, 4).unwrap();
        assert_eq!(
            exact_rounds_to_hit(&c, 1),
            Err(Error::RoundDecompositionUnavailable)
        );
    }

    #[test]
    fn mixing_profile_is_monotone() {
        let c = gap_chain(2, 1, 0.5, 10);
        let prof = tv_profile(&c, 200).unwrap();
        assert!(prof.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        let t = exact_mixing_time(&c, 1e-3, 100_000).unwrap();
        assert!(prof[t as usize] <= 1e-3);
        assert!(t == 0 || prof[t as usize - 1] > 1e-3);
        assert!(matches!(
            exact_mixing_time(&c, 1e-9, 3),
            Err(Error::BudgetExceeded { budget: 3, .. })
        ));
    }

    #[test]
    fn slow_mixing_small_depth() {
        let slow = make_slow_mixing(6).unwrap();
        let c = build_chain(&slow, &frontier2(), 0.8, 6).unwrap();
        assert!(c.is_irreducible());
        let t = exact_mixing_time(&c, 0.25, 1_000_000).unwrap();
        assert!(t as f64 >= 0.25 * 1.25f64.powi(6));
    }

    #[test]
    fn dumps() {
        let c = gap_chain(1, 0, 0.5, 2);
        let j = serde_json::to_value(c.to_dump()).unwrap();
        assert_eq!(j["edges"].as_array().unwrap().len(), 2 * c.len());
        assert_eq!(j["states"][0], serde_json::json!([0, 0]));
        assert!(c.to_dot().contains("\"(0,1)\" -> \"(0,0)\" [style=dashed"));
    }
}
