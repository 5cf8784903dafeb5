//! Purification of whole profiles and equilibria.

pub mod combine;
pub mod nash;
pub mod reduce;
pub mod theorem;

pub use combine::{combine_games, flatten, lemma2_purify, CombinedGame, CombinedPurification, SubGameCheck};
pub use nash::{
    deviation_grids, epsilon_nash_check, find_equilibrium_discretized, quantize_weights, FindEqConfig, FindEqResult,
    NashCheck,
};
pub use reduce::{aggregate_opponents, integrate_out_players, Aggregation};
pub use theorem::{
    theorem2_purify, theorem3_purify_equilibrium, EquilibriumConfig, NashCertificate, ProfileCheck, StageReport,
};
