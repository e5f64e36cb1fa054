//! Data files, run configuration, presets, summaries and predictive bands.

pub mod config;
pub mod output;
pub mod predict;
pub mod preset;
pub mod series;
pub mod summary;

pub use config::{AgentGroup, Algorithm, Dataset, InitialValue, Response, RunConfig, Scenario};
pub use output::{write_hidden_states_csv, write_simulation_csv};
pub use predict::{predict_trajectories, BandRow, PredictOptions, PredictiveBands, Series};
pub use preset::{builtin_series, diamond_princess_preset, preset, preset_names};
pub use series::{load_case_series, parse_case_series, CaseSeries};
pub use summary::{posterior_mean_lambda, posterior_summary, PosteriorSummary, SummaryRow};
