//! Explicit quantum strategies, their statistics and reference entropies.

mod bell;
mod distribution;
mod efficiency;
mod information;
mod optimize;
mod strategy;

pub use bell::{chsh_score, chsh_value, BellExpression, Correlator};
pub use distribution::Distribution;
pub use efficiency::{apply_detection_efficiency, fold_no_click, mark_no_click};
pub use information::{
    analytic_chsh_rate, binary_entropy, conditional_entropy, exact_entropy, shannon,
};
pub use optimize::{nelder_mead, optimize_qkd_strategy, qkd_proxy, qkd_strategy};
pub use strategy::{
    kron, projector, strategy_distribution, QubitStrategy, StateSpec, StrategySpec,
};
