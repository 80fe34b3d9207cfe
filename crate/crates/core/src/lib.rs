//! Two-player mining game as an explicit Markov chain.
//!
//! [`policy`] describes capitulation rules, [`chain`] builds and solves the
//! induced chain, [`payoff`] turns the stationary law into shares and
//! revenues. [`closedform`] and [`lattice`] give exact answers for
//! constant-gap play, [`bounds`] the analytic estimates, and [`sim`] a
//! Monte Carlo cross-check.

pub mod bounds;
pub mod chain;
pub mod closedform;
pub mod error;
pub mod game;
pub mod lattice;
pub mod payoff;
pub mod policy;
mod precise;
pub mod sim;

pub use chain::{build_chain, build_chain_with, stationary, Boundary, Distribution, MiningChain};
pub use error::{Error, Result};
pub use game::{Decision, MoveKind, Player, State};
pub use payoff::{analyze, CostModel, PayoffReport};
pub use policy::{make_constant_gap, make_frontier, make_slow_mixing, CapitulationPolicy, Depth};
