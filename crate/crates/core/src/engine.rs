//! Run orchestration: the per-step loop, single runs and seed suites.

use crate::dynamics;
use crate::ledger::{settle_agent, Exogenous};
use crate::metrics::{compute_metrics, MetricsRecord};
use crate::model::{
    build_population, rng_for_seed, AgentState, ExpenseBaseline, FlowRecord, ModelParams,
    ParamError, ScenarioConfig, SimRng,
};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("a suite needs at least one scenario")]
    NoScenarios,
    #[error("a suite needs at least one seed")]
    NoSeeds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub params: ModelParams,
    /// One record per step, `t = 1..=T`.
    pub series: Vec<MetricsRecord>,
}

/// Computes the exogenous flows of one agent at step `t` from its two draws.
pub fn exogenous_for(
    agent: &AgentState,
    income_draw: f64,
    welfare_draw: f64,
    t: u32,
    params: &ModelParams,
    scenario: &ScenarioConfig,
) -> Exogenous {
    let group = params
        .group(agent.group)
        .expect("agent belongs to a configured group");
    let c = &params.control;
    let horizon = params.horizon;
    let income = dynamics::income_at(income_draw, c.income, t, horizon, scenario.income_decay);
    let welfare = dynamics::welfare_at(welfare_draw, c.welfare, t, horizon, scenario.welfare_decay);
    let env_utility = dynamics::env_utility_at(
        params.env_amplitude,
        c.environment,
        t,
        horizon,
        scenario.env_decay,
    );
    let expense_base = match scenario.expense_baseline {
        ExpenseBaseline::CurrentIncome => income,
        ExpenseBaseline::InitialIncome => agent.income_baseline,
    };
    let expense = dynamics::expense_at(
        expense_base,
        group.expense_rate,
        c.expense,
        t,
        scenario.expense_growth,
    );
    let tax = dynamics::tax_at(
        income,
        group.tax_rate,
        c.tax,
        t,
        horizon,
        scenario.tax_growth,
    );
    Exogenous {
        income,
        welfare,
        env_utility,
        expense,
        tax,
    }
}

/// Advances every agent by one step and aggregates the post-policy state.
///
/// Draws are taken sequentially in agent order (income, then welfare) before
/// any settlement, so the settlement itself may run in any order.
pub fn step(
    population: &mut [AgentState],
    flows: &mut Vec<FlowRecord>,
    t: u32,
    params: &ModelParams,
    scenario: &ScenarioConfig,
    rng: &mut SimRng,
) -> MetricsRecord {
    let draws: Vec<(f64, f64)> = population
        .iter()
        .map(|agent| {
            let group = params
                .group(agent.group)
                .expect("agent belongs to a configured group");
            (group.income.draw(rng), group.welfare.draw(rng))
        })
        .collect();

    flows.clear();
    flows.extend(population.iter_mut().zip(draws).map(|(agent, (inc, wlf))| {
        let exo = exogenous_for(agent, inc, wlf, t, params, scenario);
        settle_agent(agent, &exo, params).flows
    }));
    compute_metrics(population, flows, t)
}

/// Runs `t = 1..=T` on a fresh population.
pub fn run(
    params: &ModelParams,
    scenario: ScenarioConfig,
    seed: u64,
) -> Result<RunResult, EngineError> {
    params.validate()?;
    if scenario.env_decay
        && dynamics::env_curve_is_degenerate(params.control.environment, params.horizon)
    {
        log::warn!(
            "environment curve is degenerate (alpha.env = {}, T = {}); holding it at +A",
            params.control.environment,
            params.horizon
        );
    }
    let mut rng = rng_for_seed(seed);
    let mut population = build_population(params, &mut rng)?;
    let mut flows = Vec::with_capacity(population.len());
    let series = (1..=params.horizon)
        .map(|t| step(&mut population, &mut flows, t, params, &scenario, &mut rng))
        .collect();
    Ok(RunResult {
        scenario,
        seed,
        params: params.clone(),
        series,
    })
}

/// Every scenario against every seed, scenario-major. Runs execute in
/// parallel; the output order depends only on the inputs.
pub fn run_suite(
    params: &ModelParams,
    scenarios: &[ScenarioConfig],
    seeds: &[u64],
) -> Result<Vec<RunResult>, EngineError> {
    if scenarios.is_empty() {
        return Err(EngineError::NoScenarios);
    }
    if seeds.is_empty() {
        return Err(EngineError::NoSeeds);
    }
    params.validate()?;
    let jobs: Vec<(ScenarioConfig, u64)> = scenarios
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.into_par_iter()
        .map(|(s, seed)| run(params, s, seed))
        .collect()
}
