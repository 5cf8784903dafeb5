//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the lines are always printed.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use purekit::catalog::{catalog_game, catalog_strategies, reference_strategy};
use purekit::equilibrium::{
    combine_games, deviation_grids, epsilon_nash_check, find_equilibrium_discretized, flatten, integrate_out_players,
    theorem3_purify_equilibrium, EquilibriumConfig, FindEqConfig,
};
use purekit::game::{expected_payoffs, Quadrature};
use purekit::measures::{prohorov_distance, prohorov_oracle, ActionSpace, DenseNet, FiniteSupportMeasure, DEFAULT_TOL};
use purekit::purify::{
    build_auxiliary, round_once, theorem1_purify, AdversarialSuite, BinaryGame, ConstantPayoff, Coordinate,
    OpponentStrategy, PurifyConfig, RoundingScheme, SimplexPoint,
};
use purekit::rng::stream;
use purekit::strategy::{pure_to_mixed, simple_approximate, MixedStrategy, PureStrategy};

struct Outcome {
    passed: bool,
    detail: String,
    /// Serialized results, compared across two runs for determinism.
    artifact: String,
}

fn random_measure_on_line(rng: &mut ChaCha8Rng, max_support: usize) -> FiniteSupportMeasure {
    let n = rng.gen_range(1..=max_support);
    let points: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..=40) as f64) / 40.0).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    FiniteSupportMeasure::from_atoms(points.into_iter().map(|p| vec![p]).zip(weights)).unwrap()
}

fn random_finite_space(rng: &mut ChaCha8Rng) -> ActionSpace {
    let n = rng.gen_range(2..=8);
    let xy: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
        .collect();
    let distances = xy
        .iter()
        .map(|a| {
            xy.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    ActionSpace::finite((0..n).map(|i| i as f64).collect(), distances).unwrap()
}

fn random_measure_on_labels(rng: &mut ChaCha8Rng, n: usize) -> FiniteSupportMeasure {
    let k = rng.gen_range(1..=n);
    let atoms: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|_| (vec![rng.gen_range(0..n) as f64], rng.gen_range(0.05..1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    FiniteSupportMeasure::from_atoms(atoms.into_iter().map(|(p, w)| (p, w / total))).unwrap()
}

fn random_strategy(rng: &mut ChaCha8Rng) -> MixedStrategy {
    let cells = [1, 2, 3, 4, 6, 8][rng.gen_range(0..6)];
    let values = (0..cells).map(|_| random_measure_on_line(rng, 3)).collect();
    MixedStrategy::uniform(values).unwrap()
}

fn random_pure(rng: &mut ChaCha8Rng) -> PureStrategy {
    let cells = rng.gen_range(1..=8);
    let mut cuts: Vec<f64> = (1..cells).map(|_| rng.gen_range(0.01..0.99)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut partition = vec![0.0];
    partition.extend(cuts);
    partition.push(1.0);
    let actions = (0..partition.len() - 1)
        .map(|_| vec![rng.gen_range(0.0..1.0)])
        .collect();
    PureStrategy::new(partition, actions).unwrap()
}

fn prohorov_equivalence() -> Outcome {
    let mut rng = stream(2024, "acceptance-prohorov", 0, 0);
    let interval = ActionSpace::interval(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut values = Vec::new();
    for case in 0..240 {
        let (p, q, space) = if case % 2 == 0 {
            (
                random_measure_on_line(&mut rng, 8),
                random_measure_on_line(&mut rng, 8),
                interval.clone(),
            )
        } else {
            let space = random_finite_space(&mut rng);
            let n = match &space {
                ActionSpace::Finite { points, .. } => points.len(),
                _ => unreachable!(),
            };
            (
                random_measure_on_labels(&mut rng, n),
                random_measure_on_labels(&mut rng, n),
                space,
            )
        };
        let d = prohorov_distance(&p, &q, &space, DEFAULT_TOL).unwrap();
        let o = prohorov_oracle(&p, &q, &space).unwrap();
        worst = worst.max((d - o).abs());
        values.push(d);
    }
    Outcome {
        passed: worst <= 2e-9,
        detail: format!(
            "240 pairs (120 on [0,1], 120 on finite metric spaces), max |distance - oracle| = {worst:.2e} (tol 2e-9)"
        ),
        artifact: serde_json::to_string(&values).unwrap(),
    }
}

fn lemma1_convergence() -> Outcome {
    let space = ActionSpace::interval(0.0, 1.0).unwrap();
    let net = DenseNet::new(&space, 0.05, 20).unwrap();
    let strategies = catalog_strategies().unwrap();
    let mut counts: Vec<u128> = std::iter::successors(Some(1u128), |c| Some(c * 2))
        .take_while(|&c| c < net.len())
        .collect();
    counts.push(net.len());
    let mut all_ok = true;
    let mut first_below = Vec::new();
    let mut curves = Vec::new();
    for (name, f) in &strategies {
        let curve: Vec<f64> = counts
            .iter()
            .map(|&c| simple_approximate(f, &net, c).unwrap().sup_distance)
            .collect();
        let monotone = curve.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let below = curve.iter().position(|&d| d < 0.05);
        all_ok &= monotone && below.is_some();
        if !monotone || below.is_none() {
            eprintln!("  simple approximation: {name} monotone={monotone} reaches 0.05={}", below.is_some());
        }
        first_below.push(below.map(|i| counts[i]).unwrap_or(0));
        curves.push(curve);
    }
    let worst_nu = first_below.iter().max().copied().unwrap_or(0);
    Outcome {
        passed: all_ok,
        detail: format!(
            "{} strategies, net(0.05, 20) with {} members, sup distance nonincreasing over {} prefixes; all below 0.05 by nu = {worst_nu}",
            strategies.len(),
            net.len(),
            counts.len()
        ),
        artifact: serde_json::to_string(&curves).unwrap(),
    }
}

fn step5_expectation() -> Outcome {
    let interval = ActionSpace::interval(0.0, 1.0).unwrap();
    let game = BinaryGame::new(
        interval.clone(),
        vec![interval],
        1,
        1,
        vec![1.0],
        vec![Coordinate {
            label: "one".into(),
            components: vec![0],
            payoff: Arc::new(ConstantPayoff(1.0)),
            y_cells: 0..1,
        }],
        1.0,
    )
    .unwrap();
    let k_prime = vec![vec![0.0], vec![1.0]];
    let atoms = 64;
    let aux = build_auxiliary(&game, &k_prime, &[vec![vec![0.0]]], atoms, 1).unwrap();
    let s = SimplexPoint::new(vec![1, 1], 2).unwrap();
    let t = vec![true; atoms];
    let seeds = 1000;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut means = Vec::new();
    for m in [4usize, 16, 64] {
        let sq: Vec<f64> = (0..seeds)
            .map(|seed| {
                let mut rng = stream(seed, "acceptance-step5", m as u64, 0);
                let (_, h) = round_once(atoms, &t, &s, m, RoundingScheme::Independent, &mut rng).unwrap();
                aux.seminorm(&h).powi(2)
            })
            .collect();
        let mean = sq.iter().sum::<f64>() / seeds as f64;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0);
        let se = (var / seeds as f64).sqrt();
        let bound = 1.0 / m as f64 + 3.0 * se;
        ok &= mean <= bound;
        parts.push(format!("M={m}: {mean:.5} <= {bound:.5}"));
        means.push(mean);
    }
    Outcome {
        passed: ok,
        detail: format!("mean squared seminorm over {seeds} seeds, {}", parts.join(", ")),
        artifact: serde_json::to_string(&means).unwrap(),
    }
}

fn theorem1_end_to_end() -> Outcome {
    let cfg = PurifyConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut certs = Vec::new();
    for game in ["cournot", "zero-sum-signal"] {
        let g = catalog_game(game).unwrap();
        let f = reference_strategy(game, 0).unwrap();
        for eps in [0.2, 0.1] {
            let start = Instant::now();
            let (pure, cert) = theorem1_purify(&g, 0, &f, eps, 42, &cfg).unwrap();
            let secs = start.elapsed().as_secs_f64();
            let range_ok = pure.range().len() <= cert.k_prime.len() && cert.range_size <= cert.k_prime.len();
            let seminorm_ok = cert.seminorm == 0.0 || cert.seminorm.log10() < cert.log10_kappa;
            let gap_ok = cert.max_gap < eps + cert.quadrature_budget;
            let suite_ok = cert.suite.size >= 100;
            let mc_ok = cert.monte_carlo.len() == 3
                && cert.monte_carlo.iter().all(|c| {
                    c.agrees && c.samples >= 1_000_000 && (c.monte_carlo_gap - c.quadrature_gap).abs() <= 0.005
                });
            let pass = cert.status.passed() && range_ok && seminorm_ok && gap_ok && suite_ok && mc_ok && secs < 600.0;
            ok &= pass;
            parts.push(format!(
                "{game} eps={eps}: {} (range {}/{}, gap {:.4} < {:.4}, suite {}, {secs:.0}s)",
                if pass { "ok" } else { "FAIL" },
                cert.range_size,
                cert.k_prime.len(),
                cert.max_gap,
                eps + cert.quadrature_budget,
                cert.suite.size
            ));
            certs.push(serde_json::to_string(&cert).unwrap());
        }
    }
    Outcome {
        passed: ok,
        detail: parts.join("; "),
        artifact: certs.join("\n"),
    }
}

/// Splits every atom `a` into halves at `a - w` and `a + w` (clamped).
fn spread(f: &MixedStrategy, w: f64) -> MixedStrategy {
    let values = f
        .values()
        .iter()
        .map(|m| {
            let atoms = m
                .iter()
                .flat_map(|(p, wt)| [(-w), w].map(|d| (vec![(p[0] + d).clamp(0.0, 1.0)], wt / 2.0)));
            FiniteSupportMeasure::from_atoms(atoms.collect::<Vec<_>>()).unwrap()
        })
        .collect();
    MixedStrategy::new(f.partition().to_vec(), values).unwrap()
}

fn theorem3_end_to_end() -> Outcome {
    let epsilon = 0.3;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut certs = Vec::new();
    for (game, mixed) in [
        ("zero-sum-signal", false),
        ("quadratic-coordination", false),
        ("quadratic-coordination", true),
    ] {
        let g = catalog_game(game).unwrap();
        let q = Quadrature::default();
        let start = Instant::now();
        let found = find_equilibrium_discretized(&g, &FindEqConfig::default(), &q).unwrap();
        let (input, r0) = if mixed {
            let f: Vec<MixedStrategy> = found.profile.iter().map(|f| spread(f, 0.05)).collect();
            let grids = deviation_grids(&g, 0.05);
            let r0 = epsilon_nash_check(&g, &f, &grids, &q).unwrap().max_regret();
            (f, r0)
        } else {
            (found.profile.clone(), found.check.max_regret())
        };
        let (_, cert) = theorem3_purify_equilibrium(&g, &input, epsilon, 7, &EquilibriumConfig::default()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let profiles_ok = cert.profiles.len() == 1 << g.players()
            && cert
                .profiles
                .iter()
                .all(|p| p.regrets.iter().all(|&r| r < epsilon + r0) && p.payoff_deviation < epsilon);
        let worst_regret = cert
            .profiles
            .iter()
            .flat_map(|p| p.regrets.iter().copied())
            .fold(0.0, f64::max);
        let worst_dev = cert.profiles.iter().map(|p| p.payoff_deviation).fold(0.0, f64::max);
        let limit = if g.players() == 3 { 1800.0 } else { 600.0 };
        let pass = r0 < 0.05 && cert.telescoping && cert.status.passed() && profiles_ok && secs < limit;
        ok &= pass;
        parts.push(format!(
            "{game}{} (n={}): {} (r0 {r0:.2e}, {} profiles, max regret {worst_regret:.4}, max |dU| {worst_dev:.4}, {secs:.0}s)",
            if mixed { " with mixed input" } else { "" },
            g.players(),
            if pass { "ok" } else { "FAIL" },
            cert.profiles.len()
        ));
        certs.push(serde_json::to_string(&cert).unwrap());
    }
    Outcome {
        passed: ok,
        detail: parts.join("; "),
        artifact: certs.join("\n"),
    }
}

fn reduction_identities() -> Outcome {
    let q = Quadrature::default();
    let mut rng = stream(99, "acceptance-identities", 0, 0);

    let g = catalog_game("quadratic-coordination").unwrap();
    let pairs = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    let mut integrate_worst = 0.0f64;
    let mut values = Vec::new();
    for case in 0..50 {
        let (m, j) = pairs[case % pairs.len()];
        let h: Vec<MixedStrategy> = (0..3).map(|_| random_strategy(&mut rng)).collect();
        let gj = random_strategy(&mut rng);
        let bg = integrate_out_players(&g, m, j, &h, q.subdivision).unwrap();
        let reduced = bg.expected(&h[m], &OpponentStrategy::from_mixed(&gj), &q).unwrap();
        let mut profile = h.clone();
        profile[j] = gj;
        let direct = expected_payoffs(&g, &profile, &q).unwrap();
        for c in 0..3 {
            integrate_worst = integrate_worst.max((reduced[c] - direct[c]).abs());
        }
        values.push(direct);
    }

    let a = BinaryGame::from_two_player(&catalog_game("cournot").unwrap(), 0).unwrap();
    let b = BinaryGame::from_two_player(&catalog_game("zero-sum-signal").unwrap(), 0).unwrap();
    let mut blocks = flatten(&a).unwrap();
    blocks.extend(flatten(&b).unwrap());
    let comb = combine_games(&blocks).unwrap();
    let m = comb.blocks as f64;
    let mut lemma2_worst = 0.0f64;
    for case in 0..50u64 {
        let f = random_strategy(&mut rng);
        let f2 = pure_to_mixed(&random_pure(&mut rng));
        let gs: Vec<OpponentStrategy> = blocks
            .iter()
            .enumerate()
            .map(|(i, bl)| {
                let suite = AdversarialSuite::generate(&bl.components, bl.y_res(), 8, case * 16 + i as u64).unwrap();
                suite.members[rng.gen_range(0..suite.members.len())].clone()
            })
            .collect();
        let opp = comb.opponent(&gs).unwrap();
        let u = comb.game.expected_many(&[&f, &f2], &opp, &q).unwrap();
        for (i, bl) in blocks.iter().enumerate() {
            let s = bl.expected_many(&[&f, &f2], &gs[i], &q).unwrap();
            let composite_gap = u[0][i] - u[1][i];
            let sub_gap = s[0][0] - s[1][0];
            lemma2_worst = lemma2_worst.max((composite_gap - sub_gap / m).abs());
        }
        values.push(u[0].clone());
    }
    Outcome {
        passed: integrate_worst <= 1e-10 && lemma2_worst <= 1e-12,
        detail: format!(
            "integrate-out identity max error {integrate_worst:.2e} (tol 1e-10, 50 cases); composite gap vs sub-game gap / {m} max error {lemma2_worst:.2e} (tol 1e-12, 50 cases)"
        ),
        artifact: serde_json::to_string(&values).unwrap(),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    if let Some(filter) = std::env::args().skip(1).find(|a| !a.starts_with('-')) {
        eprintln!("acceptance: ignoring filter {filter:?}, running every criterion");
    }
    let criteria: [Criterion; 6] = [
        (
            "1 prohorov oracle equivalence",
            prohorov_equivalence,
            Some(Duration::from_secs(10)),
        ),
        (
            "2 simple approximation convergence",
            lemma1_convergence,
            Some(Duration::from_secs(30)),
        ),
        (
            "3 rounding expectation bound",
            step5_expectation,
            Some(Duration::from_secs(60)),
        ),
        (
            "4 single-player purification end to end",
            theorem1_end_to_end,
            Some(Duration::from_secs(2400)),
        ),
        (
            "5 equilibrium purification end to end",
            theorem3_end_to_end,
            Some(Duration::from_secs(2400)),
        ),
        ("6 reduction and combination identities", reduction_identities, None),
    ];
    let mut all = true;
    let mut artifacts = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let passed = out.passed && in_time;
        all &= passed;
        let budget = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
        println!(
            "{} criterion {name}: {} [{:.1}s{budget}]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
        artifacts.push((name, out.artifact));
    }
    let start = Instant::now();
    let mut differing = Vec::new();
    for ((name, first), (_, run, _)) in artifacts.iter().zip(criteria) {
        if run().artifact != *first {
            differing.push(*name);
        }
    }
    let deterministic = differing.is_empty();
    all &= deterministic;
    println!(
        "{} criterion 7 determinism: reran criteria 1-6 with the same seeds, {} [{:.1}s]",
        if deterministic { "PASS" } else { "FAIL" },
        if deterministic {
            "all outputs byte-identical".to_string()
        } else {
            format!("outputs differ for {}", differing.join(", "))
        },
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
