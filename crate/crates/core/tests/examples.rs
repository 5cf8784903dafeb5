//! Worked examples of the public operations.

use purekit::catalog::catalog_game;
use purekit::equilibrium::{
    combine_games, deviation_grids, epsilon_nash_check, find_equilibrium_discretized, flatten, integrate_out_players,
    lemma2_purify, theorem3_purify_equilibrium, EquilibriumConfig, FindEqConfig,
};
use purekit::game::{expected_payoff, monte_carlo_payoffs, parse_game_spec, GameSpec, ParseOptions, Quadrature};
use purekit::measures::{FiniteSupportMeasure, Point};
use purekit::purify::{
    analytic_delta, ell_grids, purify_binary, step2_delta, theorem1_purify, BinaryGame, OpponentStrategy, PurifyConfig,
};
use purekit::strategy::MixedStrategy;

fn game(text: &str) -> GameSpec {
    parse_game_spec(text, &ParseOptions::default()).unwrap().0
}

fn two_player(u1: &str, u2: &str) -> GameSpec {
    game(&format!(
        "[game]\nname=example\nplayers=2\nbound=2\n[action.1]\nkind=interval 0 1\n[action.2]\nkind=interval 0 1\n[prior]\nkind=uniform\n[payoff.1]\nexpr={u1}\n[payoff.2]\nexpr={u2}\n"
    ))
}

fn dirac(x: f64) -> MixedStrategy {
    MixedStrategy::constant(FiniteSupportMeasure::dirac_scalar(x))
}

fn coin() -> MixedStrategy {
    MixedStrategy::constant(FiniteSupportMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap())
}

#[test]
fn expected_payoff_of_simple_profiles() {
    let q = Quadrature::default();
    let g = two_player("k1*k2", "0");
    let u = expected_payoff(&g, &[dirac(0.5), coin()], 0, &q).unwrap();
    assert!((u - 0.25).abs() < 1e-12);

    let g = two_player("k1*k2*x1", "0");
    let profile = [dirac(1.0), dirac(1.0)];
    let u = expected_payoff(&g, &profile, 0, &q).unwrap();
    assert!((u - 0.5).abs() < 1e-3);
    let (mc, _) = monte_carlo_payoffs(&g, &profile, 1_000_000, 11).unwrap();
    assert!((mc[0] - 0.5).abs() < 1e-3);
}

#[test]
fn prior_examples() {
    let g = two_player("0", "0");
    let report = g.prior().check_conditionally_atomless(0);
    assert!(report.pass);
    assert_eq!(report.undefined_mass, 0.0);
}

#[test]
fn step2_radius_examples() {
    let q = Quadrature::default();
    let k_prime: Vec<Point> = vec![vec![0.0], vec![0.5], vec![1.0]];

    // Payoff independent of the opponent action: the largest radius qualifies.
    let flat = BinaryGame::from_two_player(&two_player("k1*x1", "0"), 0)
        .unwrap()
        .nonneg_decompose();
    let ell = ell_grids(&flat.components, 21);
    let d = step2_delta(&flat, &k_prime, 0.01, &ell, 24, &q).unwrap();
    assert_eq!(d.delta, 0.5);

    // Doubling the target never shrinks the radius.
    let cournot = BinaryGame::from_two_player(&catalog_game("cournot").unwrap(), 0)
        .unwrap()
        .nonneg_decompose();
    let ell = ell_grids(&cournot.components, 21);
    let small = step2_delta(&cournot, &k_prime, 0.02, &ell, 24, &q).unwrap();
    let large = step2_delta(&cournot, &k_prime, 0.04, &ell, 24, &q).unwrap();
    assert!(large.delta >= small.delta);

    // Cournot payoffs are 1-Lipschitz in the opponent quantity and bounded
    // by 1.5, so every sampled radius under the analytic one qualifies.
    let analytic = analytic_delta(0.02, 1.0, 1.5);
    for &(r, bound) in &small.tested {
        if r <= analytic {
            assert!(bound < 0.02, "radius {r}: {bound}");
        }
    }
}

#[test]
fn pure_net_valued_input_is_kept() {
    let g = catalog_game("cournot").unwrap();
    let f = MixedStrategy::uniform(vec![
        FiniteSupportMeasure::dirac_scalar(0.25),
        FiniteSupportMeasure::dirac_scalar(0.5),
    ])
    .unwrap();
    let (pure, cert) = theorem1_purify(&g, 0, &f, 0.2, 3, &PurifyConfig::default()).unwrap();
    assert!(cert.status.passed());
    assert_eq!(cert.step1_gap, 0.0);
    assert!(cert.max_gap < 1e-12, "{}", cert.max_gap);
    assert_eq!(pure.compact().actions(), &[vec![0.25], vec![0.5]]);
}

#[test]
fn payoff_independent_of_own_action_has_no_gap() {
    let g = two_player("k2*x1", "k2");
    let f = MixedStrategy::constant(FiniteSupportMeasure::from_scalars(&[0.1, 0.9], &[0.3, 0.7]).unwrap());
    let (_, cert) = theorem1_purify(&g, 0, &f, 0.2, 9, &PurifyConfig::default()).unwrap();
    assert!(cert.status.passed());
    assert!(cert.max_gap < 1e-12, "{}", cert.max_gap);
}

#[test]
fn lemma2_with_one_game_is_a_single_purification() {
    let cournot = BinaryGame::from_two_player(&catalog_game("cournot").unwrap(), 0).unwrap();
    let one = flatten(&cournot).unwrap().remove(0);
    let f = purekit::catalog::reference_strategy("cournot", 0).unwrap();
    let cfg = PurifyConfig {
        suite_size: 100,
        ..PurifyConfig::default()
    };
    let (p, comb) = lemma2_purify(&[("cournot".into(), one.clone())], &f, 0.2, 4, &cfg).unwrap();
    let (q, _) = purify_binary(&one, "cournot", 0, &f, 0.2, 4, &cfg).unwrap();
    assert_eq!(comb.blocks, 1);
    assert!(comb.status.passed());
    assert_eq!(p, q);
}

#[test]
fn identical_blocks_halve_payoffs() {
    let cournot = BinaryGame::from_two_player(&catalog_game("cournot").unwrap(), 0).unwrap();
    let one = flatten(&cournot).unwrap().remove(0);
    let comb = combine_games(&[one.clone(), one.clone()]).unwrap();
    let f = purekit::catalog::reference_strategy("cournot", 0).unwrap();
    let g = OpponentStrategy::from_mixed(&purekit::catalog::reference_strategy("cournot", 1).unwrap());
    let q = Quadrature::default();
    let u = comb
        .game
        .expected(&f, &comb.opponent(&[g.clone(), g.clone()]).unwrap(), &q)
        .unwrap();
    let v = one.expected(&f, &g, &q).unwrap();
    for uc in &u[..2] {
        assert!((2.0 * uc - v[0]).abs() < 1e-12);
    }
    let mass: f64 = comb.game.y_marginal().iter().sum::<f64>() / comb.game.y_res() as f64;
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn dirac_players_are_integrated_out_by_conditioning() {
    let g = catalog_game("quadratic-coordination").unwrap();
    let h: Vec<MixedStrategy> = vec![dirac(0.2), dirac(0.4), dirac(0.6)];
    let bg = integrate_out_players(&g, 0, 1, &h, 2).unwrap();
    // Player 1's payoff ignores the third signal, so conditioning leaves it unchanged.
    for (k1, k2, x1, x2) in [(0.1, 0.3, 0.2, 0.7), (0.9, 0.0, 0.8, 0.1)] {
        let v = bg.coords[0].payoff.eval(&[k1], &[&[k2]], x1, x2);
        let want = 1.0 - (k1 - 0.5 * x1 - 0.25 * (k2 + 0.6f64)).powi(2);
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
    }
}

#[test]
fn regret_examples() {
    let q = Quadrature::default();
    let constant = two_player("1", "1");
    let grids = deviation_grids(&constant, 0.1);
    let check = epsilon_nash_check(&constant, &[coin(), dirac(0.3)], &grids, &q).unwrap();
    assert!(check.regrets.iter().all(|&r| r.abs() < 1e-12));

    let dominant = catalog_game("dominant-action").unwrap();
    let grids = deviation_grids(&dominant, 0.05);
    let check = epsilon_nash_check(&dominant, &[dirac(1.0), coin()], &grids, &q).unwrap();
    assert!(check.regrets[0].abs() < 1e-12);
}

#[test]
fn find_eq_examples() {
    let q = Quadrature::default();
    let dominant = catalog_game("dominant-action").unwrap();
    let cfg = FindEqConfig {
        cells: 4,
        ..FindEqConfig::default()
    };
    let out = find_equilibrium_discretized(&dominant, &cfg, &q).unwrap();
    assert!(out.check.max_regret() < 1e-12);
    assert_eq!(out.profile[0].value_at(0.5).support(), &[vec![1.0]]);
    assert_eq!(out.profile[1].value_at(0.5).support(), &[vec![0.0]]);

    let pennies = two_player("(2*k1 - 1)*(2*k2 - 1)", "-(2*k1 - 1)*(2*k2 - 1)");
    let cfg = FindEqConfig {
        cells: 1,
        grid_step: 1.0,
        iterations: 2000,
        quantize: 20,
        ..FindEqConfig::default()
    };
    let out = find_equilibrium_discretized(&pennies, &cfg, &q).unwrap();
    for f in &out.profile {
        let m = f.value_at(0.5);
        assert!((m.weight_of(&[0.0]) - 0.5).abs() < 1e-12, "{m:?}");
    }
    assert!(out.check.max_regret() < 1e-12);

    let cournot = catalog_game("cournot").unwrap();
    let cfg = FindEqConfig {
        iterations: 500,
        ..FindEqConfig::default()
    };
    let out = find_equilibrium_discretized(&cournot, &cfg, &q).unwrap();
    let grids = deviation_grids(&cournot, cfg.grid_step);
    let recheck = epsilon_nash_check(&cournot, &out.profile, &grids, &q).unwrap();
    assert!(recheck.max_regret() < 0.05);
    assert_eq!(recheck, out.check);
}

#[test]
fn equilibrium_purification_budgets_and_pure_inputs() {
    let g = catalog_game("quadratic-coordination").unwrap();
    let q = Quadrature::default();
    let found = find_equilibrium_discretized(&g, &FindEqConfig::default(), &q).unwrap();
    let eps = 0.3;
    let (_, cert) = theorem3_purify_equilibrium(&g, &found.profile, eps, 2, &EquilibriumConfig::default()).unwrap();
    assert_eq!(cert.budget_schedule[0], eps / 27.0);
    assert_eq!(cert.budget_schedule[2], eps / 3.0);
    assert!(cert.telescoping);
    assert!(cert.status.passed());
    if found.profile.iter().all(|f| f.values().iter().all(|m| m.len() == 1)) {
        for p in &cert.profiles {
            assert!(p.payoff_deviation < 1e-12);
        }
    }
}

#[test]
fn two_player_equilibrium_purification() {
    let g = catalog_game("zero-sum-signal").unwrap();
    let q = Quadrature::default();
    let found = find_equilibrium_discretized(&g, &FindEqConfig::default(), &q).unwrap();
    let (pure, cert) = theorem3_purify_equilibrium(&g, &found.profile, 0.2, 8, &EquilibriumConfig::default()).unwrap();
    assert!(cert.status.passed());
    assert_eq!(cert.profiles.len(), 4);
    assert_eq!(pure.len(), 2);
    for p in &cert.profiles {
        assert!(p.regrets.iter().all(|&r| r < 0.2 + cert.equilibrium_input_regret));
    }
}
