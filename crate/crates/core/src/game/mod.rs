//! Bayesian games on signal space `[0,1]^n`: specification, priors, payoffs
//! and the expected-payoff integrator.

pub mod expr;
pub mod payoff;
pub mod prior;
pub mod quadrature;
mod spec_file;

pub use expr::{parse_expr, Expr, Interval};
pub use payoff::{PayoffModel, PayoffTable};
pub use prior::{AtomlessReport, PairwiseAtomless, SignalPrior};
pub use quadrature::{expected_payoff, expected_payoffs, monte_carlo_payoffs, payoff_at, Quadrature};
pub use spec_file::{parse_game_spec, ParseOptions};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::ActionSpace;

/// Number of random points used to validate a declared payoff bound.
pub const BOUND_SAMPLES: usize = 10_000;

#[derive(Clone, Debug)]
pub struct GameSpec {
    pub name: String,
    players: usize,
    usual: bool,
    actions: Vec<ActionSpace>,
    prior: SignalPrior,
    payoffs: Vec<PayoffModel>,
    bound: f64,
    /// Game file text this game was built from.
    pub source: String,
}

impl GameSpec {
    pub fn new(
        name: impl Into<String>,
        actions: Vec<ActionSpace>,
        prior: SignalPrior,
        payoffs: Vec<PayoffModel>,
        bound: f64,
        usual: bool,
        source: impl Into<String>,
    ) -> Result<Self> {
        let players = actions.len();
        if players == 0 {
            return Err(Error::Validation("a game needs at least one player".into()));
        }
        if let Some(s) = actions.iter().find(|s| s.dim() != 1) {
            return Err(Error::Validation(format!(
                "player action spaces must be one-dimensional, got {s:?}"
            )));
        }
        if prior.dim() != players {
            return Err(Error::Validation(format!(
                "prior has dimension {} for {players} players",
                prior.dim()
            )));
        }
        if payoffs.is_empty() {
            return Err(Error::Validation("a game needs at least one payoff".into()));
        }
        if usual && payoffs.len() != players {
            return Err(Error::Validation(format!(
                "a usual game needs one payoff per player ({players}), got {}",
                payoffs.len()
            )));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Validation(format!("payoff bound must be positive, got {bound}")));
        }
        let g = Self {
            name: name.into(),
            players,
            usual,
            actions,
            prior,
            payoffs,
            bound,
            source: source.into(),
        };
        g.check_domains()?;
        g.check_bound()?;
        Ok(g)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    /// Payoff dimension `m`.
    pub fn payoff_dim(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_usual(&self) -> bool {
        self.usual
    }

    pub fn actions(&self) -> &[ActionSpace] {
        &self.actions
    }

    pub fn action_space(&self, i: usize) -> &ActionSpace {
        &self.actions[i]
    }

    pub fn prior(&self) -> &SignalPrior {
        &self.prior
    }

    pub fn payoffs(&self) -> &[PayoffModel] {
        &self.payoffs
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Unchecked payoff evaluation for inner loops.
    #[inline]
    pub fn payoff(&self, i: usize, k: &[f64], x: &[f64]) -> f64 {
        self.payoffs[i].eval(k, x)
    }

    /// `u_i(k, x)` with domain checks.
    pub fn eval_payoff(&self, i: usize, k: &[f64], x: &[f64]) -> Result<f64> {
        if i >= self.payoffs.len() {
            return Err(Error::Parameter(format!("payoff index {i} out of range")));
        }
        if k.len() != self.players || x.len() != self.players {
            return Err(Error::Parameter("profile length does not match player count".into()));
        }
        for (j, (&kj, s)) in k.iter().zip(&self.actions).enumerate() {
            if !s.contains(&[kj]) {
                return Err(Error::Parameter(format!(
                    "action {kj} of player {} is outside its space",
                    j + 1
                )));
            }
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!("signal {v} is outside [0, 1]")));
        }
        let v = self.payoff(i, k, x);
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "payoff {} is not finite at k={k:?}, x={x:?}",
                i + 1
            )));
        }
        if v.abs() > self.bound * (1.0 + 1e-12) {
            return Err(Error::BoundViolation {
                coordinate: i + 1,
                observed: v.abs(),
                bound: self.bound,
            });
        }
        Ok(v)
    }

    fn action_box(&self) -> Vec<Interval> {
        self.actions
            .iter()
            .map(|s| match s {
                ActionSpace::Interval { a, b } => Interval::new(*a, *b),
                ActionSpace::Finite { points, .. } => Interval::new(
                    points.iter().copied().fold(f64::INFINITY, f64::min),
                    points.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ),
                ActionSpace::Product { .. } => unreachable!("player spaces are one-dimensional"),
            })
            .collect()
    }

    fn check_domains(&self) -> Result<()> {
        let k = self.action_box();
        let x = vec![Interval::new(0.0, 1.0); self.players];
        for p in &self.payoffs {
            p.range(&k, &x)?;
        }
        Ok(())
    }

    /// Samples the payoff domain and fails if `|u_i|` exceeds the bound.
    fn check_bound(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b0d_5eed);
        let mut k = vec![0.0; self.players];
        let mut x = vec![0.0; self.players];
        let mut worst = vec![0.0f64; self.payoffs.len()];
        for s in 0..BOUND_SAMPLES {
            for (j, space) in self.actions.iter().enumerate() {
                k[j] = sample_action(space, &mut rng, s);
                x[j] = rng.gen();
            }
            for (i, p) in self.payoffs.iter().enumerate() {
                let v = p.eval(&k, &x);
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "payoff {} is not finite at k={k:?}, x={x:?}",
                        i + 1
                    )));
                }
                worst[i] = worst[i].max(v.abs());
            }
        }
        for (i, &w) in worst.iter().enumerate() {
            if w > self.bound * (1.0 + 1e-12) {
                return Err(Error::BoundViolation {
                    coordinate: i + 1,
                    observed: w,
                    bound: self.bound,
                });
            }
        }
        Ok(())
    }

    /// Largest `|u_i|` seen over the bound-validation sample.
    pub fn sampled_max_abs(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b0d_5eed);
        let mut k = vec![0.0; self.players];
        let mut x = vec![0.0; self.players];
        let mut worst = 0.0f64;
        for s in 0..BOUND_SAMPLES {
            for (j, space) in self.actions.iter().enumerate() {
                k[j] = sample_action(space, &mut rng, s);
                x[j] = rng.gen();
            }
            for p in &self.payoffs {
                worst = worst.max(p.eval(&k, &x).abs());
            }
        }
        worst
    }

    /// Same game with replaced payoff coordinates (not necessarily usual).
    pub fn with_payoffs(&self, payoffs: Vec<PayoffModel>, bound: f64, suffix: &str) -> Result<GameSpec> {
        let usual = payoffs.len() == self.players && self.usual;
        GameSpec::new(
            format!("{}{suffix}", self.name),
            self.actions.clone(),
            self.prior.clone(),
            payoffs,
            bound,
            usual,
            self.source.clone(),
        )
    }
}

/// The first samples hit the endpoints so extreme actions are always checked.
fn sample_action<R: Rng>(space: &ActionSpace, rng: &mut R, s: usize) -> f64 {
    match space {
        ActionSpace::Interval { a, b } => match s % 4 {
            0 if s < 64 => *a,
            1 if s < 64 => *b,
            _ => a + (b - a) * rng.gen::<f64>(),
        },
        ActionSpace::Finite { points, .. } => points[rng.gen_range(0..points.len())],
        ActionSpace::Product { .. } => unreachable!("player spaces are one-dimensional"),
    }
}
