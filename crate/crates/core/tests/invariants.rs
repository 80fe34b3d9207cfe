use minechain::bounds::{expected_rounds_bounds, mixing_upper_bound};
use minechain::chain::{
    exact_mixing_time, exact_rounds_to_hit, expected_hitting_time, stationarity_residual,
    stationary_dense,
};
use minechain::lattice::{band_paths_dp, count_band_paths};
use minechain::payoff::evaluate;
use minechain::policy::random_rational;
use minechain::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn frontier2() -> CapitulationPolicy {
    make_frontier(Depth::Unbounded, Player::Two)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_play_never_beats_power(seed in any::<u64>(), d in 1u32..10, s in 0u32..3, p1 in 0.05f64..0.95) {
        let s = s.min(d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pol = random_rational(&mut rng, d, s).unwrap();
        let chain = build_chain(&pol, &frontier2(), p1, d).unwrap();
        prop_assert!(chain.is_irreducible());
        let pi = stationary(&chain).unwrap();
        prop_assert!(stationarity_residual(&chain, pi.as_slice()) <= 1e-10);
        let rep = evaluate(&chain, &pi, 0.0, 0.0, 10.0).unwrap();
        prop_assert!(rep.rho1 <= p1 + 1e-10);
        prop_assert!(rep.rho2 <= 1.0 - p1 + 1e-10);
        prop_assert!((rep.g1 + rep.g2 - 1.0).abs() < 1e-10);
        prop_assert!(rep.h <= 1.0 + 1e-12 && rep.h >= 1.0 / (2.0 * f64::from(d)) - 1e-12);
    }

    #[test]
    fn propagation_solve_matches_dense(g in 1u32..6, s_frac in 0.0f64..=1.0, p1 in 0.05f64..0.95, extra in 0u32..8) {
        let s = (f64::from(g) * s_frac).floor() as u32;
        let pol = make_constant_gap(g, s, Depth::Unbounded).unwrap();
        let chain = build_chain(&pol, &frontier2(), p1, g + 1 + extra).unwrap();
        let a = stationary(&chain).unwrap();
        let b = stationary_dense(&chain).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let sum: f64 = a.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(a.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn mixing_time_below_bound(g in 1u32..5, s_frac in 0.0f64..=1.0, p1 in 0.2f64..0.8) {
        let s = (f64::from(g) * s_frac).floor() as u32;
        let pol = make_constant_gap(g, s, Depth::Unbounded).unwrap();
        let chain = build_chain(&pol, &frontier2(), p1, 20).unwrap();
        let bound = mixing_upper_bound(p1, g, 1e-2).unwrap();
        let t = exact_mixing_time(&chain, 1e-2, bound + 1).unwrap();
        prop_assert!(t <= bound);
    }

    #[test]
    fn band_formula_is_exact(l in 0u32..25, g in 1u32..9, m_frac in 0.0f64..=1.0) {
        let m = (f64::from(g) * m_frac).floor() as u32;
        let fast = count_band_paths(l, m, g).unwrap();
        prop_assert_eq!(fast.count.value, band_paths_dp(l, m, g).value);
    }
}

#[test]
fn hitting_sandwich_on_small_grid() {
    for d in 2..=6u32 {
        for g in 1..=3u32.min(d) {
            for s in 0..=g.min((d - 1) / 2) {
                for p1 in [0.2, 0.5, 0.8] {
                    let pol = make_constant_gap(g, s, Depth::Unbounded).unwrap();
                    let chain = build_chain(&pol, &frontier2(), p1, d).unwrap();
                    let er = exact_rounds_to_hit(&chain, d).unwrap();
                    let b = expected_rounds_bounds(d, g, s, p1).unwrap();
                    assert!(b.lower() <= er * (1.0 + 1e-9) && er <= b.upper() * (1.0 + 1e-9));
                    let t =
                        expected_hitting_time(&chain, State::new(d, d), State::origin()).unwrap();
                    let tol = 1.0 + 1e-9;
                    assert!(
                        er <= t * tol && t <= 2.0 * f64::from(d) * er * tol,
                        "d={d} g={g} s={s} p1={p1}"
                    );
                }
            }
        }
    }
}
