//! Benchmarks: memory capacity, the memory/nonlinearity trade-off, MSO8
//! autoregression, their metrics, and random hyperparameter search.
//!
//! Trials are independent and run on the rayon pool; results are always
//! returned in trial order, so output does not depend on scheduling.

pub mod memory;
pub mod metrics;
pub mod mso;
pub mod search;
pub mod tradeoff;

pub use memory::{mc_sweep, mc_task, mc_trial, mix_grid, summarize, McResult, McSettings, McSummary};
pub use metrics::{mean_std, nrmse, squared_correlation};
pub use mso::{mso8_experiment, mso8_signal, EvalWindow, MsoRun, MsoSettings, MsoSignal, MSO8_FREQUENCIES, MSO8_PERIOD};
pub use search::{random_search, SearchOutcome, SearchSpace, TrialRecord};
pub use tradeoff::{tradeoff_grid, TradeoffCell, TradeoffSettings};
