//! Reader for the sectioned game file format.
//!
//! ```text
//! [game]
//! players=2
//! payoffs=2
//! usual=true
//! bound=1
//! [action.1]
//! kind=interval 0 1
//! [action.2]
//! kind=finite
//! points=0 1
//! 0 1        # optional distance rows; the line metric is used otherwise
//! 1 0
//! [prior]
//! kind=grid resolution=2
//! 1.5 0.5 0.5 1.5
//! [payoff.1]
//! expr=k1*k2
//! [payoff.2]
//! table=payoff2.json
//! ```
//! `#` starts a comment. Grid densities are listed row-major with axis 1
//! fastest; table paths are relative to the game file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::expr::parse_expr_at;
use super::payoff::{PayoffModel, PayoffTable};
use super::prior::SignalPrior;
use super::GameSpec;
use crate::error::{Error, Result};
use crate::measures::ActionSpace;

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    /// Reject unnormalized prior densities instead of rescaling them.
    pub strict: bool,
    /// Directory against which table paths are resolved.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    /// One-based column of the first value character.
    column: usize,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    keys: BTreeMap<String, Entry>,
    rows: Vec<(usize, Vec<f64>)>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn numbers(text: &str, line: usize, column: usize) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| syntax(line, column, format!("expected a number, found `{t}`")))
        })
        .collect()
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if trimmed.starts_with('[') {
            if !trimmed.ends_with(']') {
                return Err(syntax(line, indent + 1, "unterminated section header"));
            }
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            if sections.contains_key(&name) {
                return Err(syntax(line, indent + 1, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.clone(),
                Section {
                    line,
                    ..Default::default()
                },
            );
            current = Some(name);
            continue;
        }
        let Some(name) = current.as_ref() else {
            return Err(syntax(line, indent + 1, "content before the first section"));
        };
        let section = sections.get_mut(name).unwrap();
        if let Some(eq) = trimmed.find('=') {
            let key = trimmed[..eq].trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(syntax(line, indent + 1, "malformed key"));
            }
            let mut value = &trimmed[eq + 1..];
            let mut value_col = indent + eq + 2;
            // `kind=grid resolution=4` carries a second key on the same line.
            if key == "kind" {
                if let Some(p) = value.find(" resolution=") {
                    let res = &value[p + " resolution=".len()..];
                    section.keys.insert(
                        "resolution".into(),
                        Entry {
                            value: res.trim().to_string(),
                            line,
                            column: value_col + p + " resolution=".len(),
                        },
                    );
                    value = &value[..p];
                }
            }
            let lead = value.len() - value.trim_start().len();
            value_col += lead;
            section.keys.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                    column: value_col,
                },
            );
        } else {
            section.rows.push((line, numbers(trimmed, line, indent + 1)?));
        }
    }
    Ok(sections)
}

fn required<'a>(s: &'a Section, name: &str, key: &str) -> Result<&'a Entry> {
    s.keys
        .get(key)
        .ok_or_else(|| syntax(s.line, 1, format!("section [{name}] is missing `{key}`")))
}

fn parse_num<T: std::str::FromStr>(e: &Entry, what: &str) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| syntax(e.line, e.column, format!("invalid {what} `{}`", e.value)))
}

/// Parses and validates a game file. Returns the game and any warnings
/// (currently only prior rescaling in lenient mode).
pub fn parse_game_spec(text: &str, opts: &ParseOptions) -> Result<(GameSpec, Vec<String>)> {
    let sections = split_sections(text)?;
    for (name, s) in &sections {
        let known = name == "game"
            || name == "prior"
            || name.strip_prefix("action.").is_some()
            || name.strip_prefix("payoff.").is_some();
        if !known {
            return Err(syntax(s.line, 1, format!("unknown section [{name}]")));
        }
    }
    let game = sections
        .get("game")
        .ok_or_else(|| syntax(1, 1, "missing [game] section"))?;
    let players: usize = parse_num(required(game, "game", "players")?, "player count")?;
    if players == 0 {
        return Err(Error::Validation("players must be at least 1".into()));
    }
    let m: usize = match game.keys.get("payoffs") {
        Some(e) => parse_num(e, "payoff count")?,
        None => players,
    };
    let usual = match game.keys.get("usual") {
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(syntax(e.line, e.column, "usual must be true or false")),
        },
        None => m == players,
    };
    let bound: f64 = parse_num(required(game, "game", "bound")?, "bound")?;
    let name = game
        .keys
        .get("name")
        .map(|e| e.value.clone())
        .unwrap_or_else(|| "game".into());

    let mut actions = Vec::with_capacity(players);
    for i in 1..=players {
        let sname = format!("action.{i}");
        let s = sections
            .get(&sname)
            .ok_or_else(|| syntax(game.line, 1, format!("missing [{sname}] section")))?;
        actions.push(parse_action(s, &sname)?);
    }

    let mut warnings = Vec::new();
    let prior = match sections.get("prior") {
        None => SignalPrior::uniform(players),
        Some(s) => {
            let kind = required(s, "prior", "kind")?;
            match kind.value.as_str() {
                "uniform" => SignalPrior::uniform(players),
                "grid" => {
                    let g: usize = parse_num(required(s, "prior", "resolution")?, "resolution")?;
                    let density: Vec<f64> = s.rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
                    let (p, rescaled) = SignalPrior::grid(players, g, density, opts.strict)?;
                    if rescaled {
                        warnings.push("prior density rescaled to total mass 1".to_string());
                    }
                    p
                }
                other => return Err(syntax(kind.line, kind.column, format!("unknown prior kind `{other}`"))),
            }
        }
    };

    let mut payoffs = Vec::with_capacity(m);
    for i in 1..=m {
        let sname = format!("payoff.{i}");
        let s = sections
            .get(&sname)
            .ok_or_else(|| syntax(game.line, 1, format!("missing [{sname}] section")))?;
        payoffs.push(match (s.keys.get("expr"), s.keys.get("table")) {
            (Some(e), None) => PayoffModel::Expression {
                source: e.value.clone(),
                expr: parse_expr_at(&e.value, players, e.line, e.column)?,
            },
            (None, Some(t)) => {
                let path = resolve(opts.base_dir.as_deref(), &t.value);
                let body = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
                let table: PayoffTable = serde_json::from_str(&body)?;
                let table = PayoffTable::new(table.axes, table.values)?;
                if table.axes.len() != 2 * players {
                    return Err(Error::Validation(format!(
                        "table {} needs {} axes (k1..k{players}, x1..x{players})",
                        t.value,
                        2 * players
                    )));
                }
                PayoffModel::Table {
                    path: t.value.clone(),
                    table,
                }
            }
            _ => {
                return Err(syntax(
                    s.line,
                    1,
                    format!("[{sname}] needs exactly one of `expr` or `table`"),
                ))
            }
        });
    }
    if let Some((name, s)) = sections.iter().find(|(n, _)| {
        n.strip_prefix("payoff.")
            .and_then(|i| i.parse::<usize>().ok())
            .is_some_and(|i| i == 0 || i > m)
    }) {
        return Err(syntax(
            s.line,
            1,
            format!("section [{name}] exceeds the declared payoff count"),
        ));
    }

    let spec = GameSpec::new(name, actions, prior, payoffs, bound, usual, text)?;
    Ok((spec, warnings))
}

fn resolve(base: Option<&Path>, rel: &str) -> PathBuf {
    match base {
        Some(b) if Path::new(rel).is_relative() => b.join(rel),
        _ => PathBuf::from(rel),
    }
}

fn parse_action(s: &Section, name: &str) -> Result<ActionSpace> {
    let kind = required(s, name, "kind")?;
    let mut parts = kind.value.split_whitespace();
    match parts.next() {
        Some("interval") => {
            let rest: Vec<&str> = parts.collect();
            let v = numbers(&rest.join(" "), kind.line, kind.column)?;
            if v.len() != 2 {
                return Err(syntax(kind.line, kind.column, "interval needs two endpoints"));
            }
            ActionSpace::interval(v[0], v[1])
        }
        Some("finite") => {
            let pts = required(s, name, "points")?;
            let points = numbers(&pts.value, pts.line, pts.column)?;
            if s.rows.is_empty() {
                ActionSpace::finite_on_line(points)
            } else {
                let rows: Vec<Vec<f64>> = s.rows.iter().map(|(_, r)| r.clone()).collect();
                ActionSpace::finite(points, rows)
            }
        }
        _ => Err(syntax(
            kind.line,
            kind.column,
            format!("unknown action kind `{}`", kind.value),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[game]\nplayers=2\nbound=1\n[action.1]\nkind=interval 0 1\n[action.2]\nkind=interval 0 1\n[prior]\nkind=uniform\n[payoff.1]\nexpr=k1*k2\n[payoff.2]\nexpr=1 - k1*k2\n";

    #[test]
    fn minimal_two_player() {
        let (g, w) = parse_game_spec(MINIMAL, &ParseOptions::default()).unwrap();
        assert_eq!((g.players(), g.payoff_dim()), (2, 2));
        assert!(g.is_usual() && w.is_empty());
        assert_eq!(g.eval_payoff(0, &[0.5, 0.5], &[0.1, 0.2]).unwrap(), 0.25);
    }

    #[test]
    fn dangling_operator_reports_position() {
        let text = MINIMAL.replace("expr=k1*k2", "expr=k1 +");
        match parse_game_spec(&text, &ParseOptions::default()) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (11, 9)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_prior_rescaling() {
        let text = MINIMAL.replace("kind=uniform", "kind=grid resolution=2\n2 2\n2 2  # mass 2");
        let (g, w) = parse_game_spec(&text, &ParseOptions::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(g.prior().density_values(), &[1.0; 4]);
        let strict = ParseOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(parse_game_spec(&text, &strict), Err(Error::Normalization(_))));
    }

    #[test]
    fn finite_action_with_distances() {
        let text = MINIMAL.replace(
            "[action.2]\nkind=interval 0 1",
            "[action.2]\nkind=finite\npoints=0 1\n0 0.5\n0.5 0",
        );
        let (g, _) = parse_game_spec(&text, &ParseOptions::default()).unwrap();
        assert_eq!(g.action_space(1).diameter(), 0.5);
    }

    #[test]
    fn bound_violation_is_reported() {
        let text = MINIMAL.replace("expr=1 - k1*k2", "expr=3*k1");
        assert!(matches!(
            parse_game_spec(&text, &ParseOptions::default()),
            Err(Error::BoundViolation { coordinate: 2, .. })
        ));
    }

    #[test]
    fn unknown_identifier_is_reported() {
        let text = MINIMAL.replace("expr=k1*k2", "expr=k1*z");
        assert!(matches!(
            parse_game_spec(&text, &ParseOptions::default()),
            Err(Error::UnknownIdentifier {
                line: 11,
                column: 9,
                ..
            })
        ));
    }
}
