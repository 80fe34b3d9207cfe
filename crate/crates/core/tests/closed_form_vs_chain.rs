use approx::assert_relative_eq;
use minechain::closedform::{default_truncation, evaluate, market_share_curve};
use minechain::*;

fn chain_rates(g: u32, p1: f64, depth: u32) -> (f64, f64) {
    let pol = make_constant_gap(g, 0, Depth::Unbounded).unwrap();
    let f2 = make_frontier(Depth::Unbounded, Player::Two);
    let rep = analyze(&pol, &f2, p1, depth, CostModel::ZERO, 10.0).unwrap();
    (rep.rho1, rep.rho2)
}

#[test]
fn agrees_with_truncated_chain_off_balance() {
    for p1 in [0.3, 0.7] {
        for g in 1..=10 {
            let c = evaluate(g, p1).unwrap();
            let (r1, r2) = chain_rates(g, p1, default_truncation(g));
            assert_relative_eq!(c.rho1, r1, max_relative = 1e-9);
            assert_relative_eq!(c.rho2, r2, max_relative = 1e-9);
        }
    }
}

#[test]
fn balanced_power_needs_deeper_truncation_for_wide_bands() {
    for g in 1..=8 {
        let c = evaluate(g, 0.5).unwrap();
        let (r1, _) = chain_rates(g, 0.5, 200);
        assert_relative_eq!(c.rho1, r1, max_relative = 1e-7);
    }
    // Diagonal mass decays like cos²(π/(g+2))^depth at p1 = 1/2.
    let c = evaluate(10, 0.5).unwrap();
    let shallow = (chain_rates(10, 0.5, 200).0 - c.rho1).abs() / c.rho1;
    let deep = (chain_rates(10, 0.5, 400).0 - c.rho1).abs() / c.rho1;
    assert!(shallow > 1e-6);
    assert!(deep < 1e-9);
}

#[test]
fn width_one_hand_reduction() {
    let c = evaluate(1, 0.5).unwrap();
    assert_relative_eq!(c.rho1, 4.0 / 9.0, epsilon = 1e-12);
    assert_relative_eq!(c.rho2, 7.0 / 18.0, epsilon = 1e-12);
    assert_relative_eq!(c.origin_mass(1), 0.5, epsilon = 1e-12);
}

#[test]
fn origin_mass_matches_chain() {
    for (g, p1) in [(2, 0.4), (5, 0.6)] {
        let c = evaluate(g, p1).unwrap();
        let pol = make_constant_gap(g, 0, Depth::Unbounded).unwrap();
        let chain =
            build_chain(&pol, &make_frontier(Depth::Unbounded, Player::Two), p1, 200).unwrap();
        let pi = stationary(&chain).unwrap();
        let at = pi.at(&chain, State::origin()).unwrap();
        assert_relative_eq!(c.origin_mass(g), at, max_relative = 1e-9);
    }
}

#[test]
fn curve_revenue_identity() {
    let ps: Vec<f64> = (1..200).map(|i| f64::from(i) * 0.005).collect();
    let rows = market_share_curve(&[0, 1, 9, 25, 49], &ps, CostModel::default(), 10.0).unwrap();
    for r in rows {
        assert!(r.flags.iter().all(|f| !f.starts_with("error")), "{r:?}");
        let rep = r.report;
        assert_relative_eq!(
            rep.r1,
            rep.rho1 - rep.c1 * rep.tau_bar * rep.h,
            epsilon = 1e-12
        );
        assert!((rep.g1 + rep.g2 - 1.0).abs() < 1e-10);
        assert!(rep.rho1 <= r.p1 + 1e-10, "{r:?}");
    }
}
