//! Built-in games and reference strategies.

use crate::error::{Error, Result};
use crate::game::{parse_game_spec, GameSpec, ParseOptions};
use crate::measures::FiniteSupportMeasure;
use crate::strategy::{to_piecewise, EvaluableStrategy, MixedStrategy};

pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

const COURNOT: &str = "\
[game]
name=cournot
players=2
bound=1.5
[action.1]
kind=interval 0 1
[action.2]
kind=interval 0 1
[prior]
kind=grid resolution=4
1.4 1.0 0.8 0.6
1.0 1.4 1.0 0.8
0.8 1.0 1.4 1.0
0.6 0.8 1.0 1.4
[payoff.1]
expr=k1*max(0, 0.8 + 0.2*(x1 + x2) - k1 - k2) - 0.1*k1
[payoff.2]
expr=k2*max(0, 0.8 + 0.2*(x1 + x2) - k1 - k2) - 0.15*k2
";

const ZERO_SUM_SIGNAL: &str = "\
[game]
name=zero-sum-signal
players=2
bound=1
[action.1]
kind=interval 0 1
[action.2]
kind=interval 0 1
[prior]
kind=grid resolution=4
0.7 0.9 1.1 1.3
0.9 0.9 1.1 1.1
1.1 1.1 0.9 0.9
1.3 1.1 0.9 0.7
[payoff.1]
expr=0.5*(k1 - k2)^2*(1 + x1 - x2)
[payoff.2]
expr=-0.5*(k1 - k2)^2*(1 + x1 - x2)
";

const QUADRATIC_COORDINATION: &str = "\
[game]
name=quadratic-coordination
players=3
bound=1
[action.1]
kind=interval 0 1
[action.2]
kind=interval 0 1
[action.3]
kind=interval 0 1
[prior]
kind=grid resolution=2
1.3 0.9
0.9 0.9
0.9 0.9
0.9 1.3
[payoff.1]
expr=1 - (k1 - 0.5*x1 - 0.25*(k2 + k3))^2
[payoff.2]
expr=1 - (k2 - 0.5*x2 - 0.25*(k1 + k3))^2
[payoff.3]
expr=1 - (k3 - 0.5*x3 - 0.25*(k1 + k2))^2
";

const DOMINANT_ACTION: &str = "\
[game]
name=dominant-action
players=2
bound=1.5
[action.1]
kind=interval 0 1
[action.2]
kind=interval 0 1
[prior]
kind=uniform
[payoff.1]
expr=k1 + 0.25*k2*x1
[payoff.2]
expr=0.5*k1*x2 - k2
";

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "cournot",
        description: "Cournot duopoly with signal-shifted demand and correlated 4x4 grid prior",
        text: COURNOT,
    },
    CatalogEntry {
        name: "quadratic-coordination",
        description: "three-player quadratic coordination on own signal and the others' actions",
        text: QUADRATIC_COORDINATION,
    },
    CatalogEntry {
        name: "zero-sum-signal",
        description: "two-player evasion game whose stakes depend on the signal difference",
        text: ZERO_SUM_SIGNAL,
    },
    CatalogEntry {
        name: "dominant-action",
        description: "two-player game with strictly dominant actions 1 and 0",
        text: DOMINANT_ACTION,
    },
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

pub fn catalog_entry(name: &str) -> Result<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| {
        Error::Parameter(format!(
            "unknown catalog game `{name}` (known: {})",
            catalog_names().join(", ")
        ))
    })
}

pub fn catalog_game(name: &str) -> Result<GameSpec> {
    let entry = catalog_entry(name)?;
    Ok(parse_game_spec(
        entry.text,
        &ParseOptions {
            strict: true,
            ..Default::default()
        },
    )?
    .0)
}

fn two_point(a: f64, b: f64, wa: f64) -> Result<FiniteSupportMeasure> {
    if a == b {
        return Ok(FiniteSupportMeasure::dirac_scalar(a));
    }
    FiniteSupportMeasure::from_scalars(&[a, b], &[wa, 1.0 - wa])
}

/// Signal-dependent mixed strategies used as purification inputs; `i`
/// selects one of five rules.
pub fn rule(i: usize) -> EvaluableStrategy {
    match i % 5 {
        0 => EvaluableStrategy::new(8, |x| two_point(0.2 + 0.3 * x, 0.55 + 0.3 * x, 0.5)),
        1 => EvaluableStrategy::new(8, |x| two_point(0.0, 1.0, 0.3 + 0.4 * x)),
        2 => EvaluableStrategy::new(8, |x| {
            FiniteSupportMeasure::from_scalars(&[0.1, 0.45 + 0.1 * x, 0.93], &[0.25, 0.5, 0.25])
        }),
        3 => EvaluableStrategy::new(8, |x| Ok(FiniteSupportMeasure::dirac_scalar(0.17 + 0.61 * x))),
        _ => EvaluableStrategy::new(8, |x| two_point(0.33 * x, 1.0 - 0.21 * x, 0.7)),
    }
}

/// Reference mixed strategy of a catalog game for `player` (zero-based).
pub fn reference_strategy(name: &str, player: usize) -> Result<MixedStrategy> {
    let g = catalog_game(name)?;
    if player >= g.players() {
        return Err(Error::Parameter(format!("{name} has {} players", g.players())));
    }
    let i = match name {
        "cournot" => player,
        "zero-sum-signal" => 1 + 3 * player,
        "quadratic-coordination" => 2 + player,
        _ => 3,
    };
    let r = rule(i);
    to_piecewise(&r, 8)
}

/// Twenty mixed strategies: every rule at four cell counts.
pub fn catalog_strategies() -> Result<Vec<(String, MixedStrategy)>> {
    let mut out = Vec::new();
    for cells in [4, 8, 12, 16] {
        for i in 0..5 {
            out.push((format!("rule{i}-{cells}"), to_piecewise(&rule(i), cells)?));
        }
    }
    Ok(out)
}
