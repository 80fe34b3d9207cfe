use minechain::chain::{exact_mixing_time, expected_hitting_time};
use minechain::sim::{hitting_mean, hitting_samples, run, SimConfig};
use minechain::*;

fn frontier2() -> CapitulationPolicy {
    make_frontier(Depth::Unbounded, Player::Two)
}

#[test]
fn width_one_share() {
    let g1 = make_constant_gap(1, 0, Depth::Unbounded).unwrap();
    let mut cfg = SimConfig::new(0.5, g1, frontier2(), 200);
    cfg.turns = 1_000_000;
    cfg.seed = 7;
    let s = run(&cfg).unwrap();
    assert!(s.g1.covers(8.0 / 15.0, 3.0), "{:?}", s.g1);
    assert!(s.h.covers(5.0 / 6.0, 3.0), "{:?}", s.h);
    assert!((s.g1_verbatim - s.g1.value).abs() < 1e-5);
}

#[test]
fn visit_frequencies_approach_stationary_law() {
    let g = make_constant_gap(3, 1, Depth::Unbounded).unwrap();
    let chain = build_chain(&g, &frontier2(), 0.4, 8).unwrap();
    assert!(chain.len() <= 100);
    assert!(exact_mixing_time(&chain, 1e-2, 1_000).unwrap() <= 1_000);
    let pi = stationary(&chain).unwrap();
    let mut cfg = SimConfig::new(0.4, g, frontier2(), 8);
    cfg.seed = 3;
    let s = run(&cfg).unwrap();
    assert!(s.l1_distance(&chain, pi.as_slice()) <= 0.01);
}

#[test]
fn hitting_mean_matches_linear_solve() {
    let g = make_constant_gap(1, 0, Depth::Unbounded).unwrap();
    let chain = build_chain(&g, &frontier2(), 0.5, 1).unwrap();
    let exact = expected_hitting_time(&chain, State::new(1, 1), State::origin()).unwrap();
    let mut cfg = SimConfig::new(0.5, g, frontier2(), 1);
    cfg.record_hitting = Some(State::new(1, 1));
    let samples = hitting_samples(&cfg, 10_000, 1_000_000).unwrap();
    let est = hitting_mean(&samples).unwrap();
    assert!(est.covers(exact, 3.0), "{est:?} vs {exact}");
}

#[test]
fn deep_diagonal_is_never_reached() {
    let g = make_constant_gap(3, 0, Depth::Unbounded).unwrap();
    let mut cfg = SimConfig::new(0.5, g, frontier2(), 100);
    cfg.record_hitting = Some(State::new(100, 100));
    let samples = hitting_samples(&cfg, 8, 100_000).unwrap();
    assert!(samples.iter().all(|s| s.censored));
}

#[test]
fn time_domain_block_rate_matches_target() {
    let g = make_constant_gap(2, 0, Depth::Unbounded).unwrap();
    let mut cfg = SimConfig::new(0.6, g, frontier2(), 50);
    cfg.turns = 400_000;
    cfg.tau_bar = Some(10.0);
    let t = run(&cfg).unwrap().time.unwrap();
    assert!((t.minutes_per_block - 10.0).abs() < 0.1, "{t:?}");
}
