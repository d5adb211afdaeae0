//! Agent-based simulation of households coping with deteriorating economic
//! conditions: rising expenses and taxes, a decaying environment, shrinking
//! welfare and income.
//!
//! Agents fall into income groups, settle their flows every step into a
//! ledger of savings, investment returns, credit and inherited assets, and
//! cover deficits through a fixed balancing cascade. Aggregate series are
//! collected per step and analysed for collapse windows across seeds.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod engine;
pub mod ledger;
pub mod metrics;
pub mod model;
pub mod output;

pub use engine::{run, run_suite, RunResult};
pub use metrics::{Metric, MetricsRecord};
pub use model::{AgentState, FlowRecord, GroupId, ModelParams, ScenarioConfig};
