//! Domain types, the default parameter set and population construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The random stream backing one run. Seeded from a single `u64`.
pub type SimRng = ChaCha8Rng;

pub fn rng_for_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Continuous draw over `[lo, hi)`. Returns `lo` when the range is empty.
///
/// Every random quantity in the model goes through this function, consuming
/// exactly one `f64` from the stream.
pub fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    lo + (hi - lo) * u
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("population must contain at least one agent")]
    EmptyPopulation,
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("no income groups configured")]
    NoGroups,
    #[error("income group `{0}` configured more than once")]
    DuplicateGroup(GroupId),
    #[error("group fractions sum to {0}, expected 1")]
    FractionSum(f64),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: String,
        value: f64,
        range: &'static str,
    },
    #[error("group `{group}`: {what} range is inverted ({lo} > {hi})")]
    InvertedRange {
        group: GroupId,
        what: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("cannot split {n} agents over the group fractions")]
    Apportionment { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    High,
    Medium,
    Low,
}

impl GroupId {
    pub const ALL: [GroupId; 3] = [GroupId::High, GroupId::Medium, GroupId::Low];

    pub fn index(self) -> usize {
        match self {
            GroupId::High => 0,
            GroupId::Medium => 1,
            GroupId::Low => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupId::High => "high",
            GroupId::Medium => "medium",
            GroupId::Low => "low",
        }
    }

    pub fn from_name(name: &str) -> Option<GroupId> {
        match name {
            "high" => Some(GroupId::High),
            "medium" | "mid" => Some(GroupId::Medium),
            "low" => Some(GroupId::Low),
            _ => None,
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed currency interval used for the uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn draw(&self, rng: &mut SimRng) -> f64 {
        uniform(rng, self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeGroup {
    pub id: GroupId,
    pub fraction: f64,
    /// Direct tax rate on income.
    pub tax_rate: f64,
    /// Share of income spent at t = 0.
    pub expense_rate: f64,
    pub income: Range,
    pub inherited: Range,
    pub welfare: Range,
}

/// Rates controlling how fast each factor deteriorates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRates {
    pub expense: f64,
    pub environment: f64,
    pub tax: f64,
    pub income: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub agents: usize,
    pub groups: Vec<IncomeGroup>,
    /// Initial credit limit as a multiple of the t = 0 income draw.
    pub credit_multiple: f64,
    /// Fraction of outstanding debt repaid each step.
    pub repayment_rate: f64,
    /// Fraction of positive savings that is invested.
    pub invest_fraction: f64,
    /// Return credited to the ROI pool per unit invested.
    pub roi_rate: f64,
    pub control: ControlRates,
    pub horizon: u32,
    /// Peak environment utility.
    pub env_amplitude: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            agents: 100,
            groups: vec![
                IncomeGroup {
                    id: GroupId::High,
                    fraction: 0.10,
                    tax_rate: 0.35,
                    expense_rate: 0.25,
                    income: Range::new(8.0, 10.0),
                    inherited: Range::new(8.0, 10.0),
                    welfare: Range::new(1.0, 2.0),
                },
                IncomeGroup {
                    id: GroupId::Medium,
                    fraction: 0.30,
                    tax_rate: 0.20,
                    expense_rate: 0.40,
                    income: Range::new(4.0, 7.0),
                    inherited: Range::new(4.0, 7.0),
                    welfare: Range::new(3.0, 5.0),
                },
                IncomeGroup {
                    id: GroupId::Low,
                    fraction: 0.60,
                    tax_rate: 0.10,
                    expense_rate: 0.98,
                    income: Range::new(1.0, 3.0),
                    inherited: Range::new(1.0, 3.0),
                    welfare: Range::new(5.0, 7.0),
                },
            ],
            credit_multiple: 10.0,
            repayment_rate: 0.01,
            invest_fraction: 0.50,
            roi_rate: 0.15,
            control: ControlRates {
                expense: 0.15,
                environment: 0.025,
                tax: 1.0,
                income: 1.0,
                welfare: 1.0,
            },
            horizon: 300,
            env_amplitude: 10.0,
        }
    }
}

fn check_unit(name: &str, value: f64, allow_zero: bool) -> Result<(), ParamError> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&value)
    } else {
        value > 0.0 && value <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name: name.to_string(),
            value,
            range: if allow_zero { "[0, 1]" } else { "(0, 1]" },
        })
    }
}

fn check_positive(name: &str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name: name.to_string(),
            value,
            range: "(0, inf)",
        })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.agents == 0 {
            return Err(ParamError::EmptyPopulation);
        }
        if self.horizon == 0 {
            return Err(ParamError::EmptyHorizon);
        }
        if self.groups.is_empty() {
            return Err(ParamError::NoGroups);
        }
        let mut seen = [false; 3];
        for g in &self.groups {
            if std::mem::replace(&mut seen[g.id.index()], true) {
                return Err(ParamError::DuplicateGroup(g.id));
            }
            check_unit(&format!("groups.{}.fraction", g.id), g.fraction, true)?;
            check_unit(&format!("groups.{}.delta", g.id), g.tax_rate, true)?;
            check_unit(&format!("groups.{}.gamma", g.id), g.expense_rate, true)?;
            for (what, r) in [
                ("income", g.income),
                ("inherited", g.inherited),
                ("welfare", g.welfare),
            ] {
                if !(r.min.is_finite() && r.max.is_finite()) || r.min < 0.0 {
                    return Err(ParamError::OutOfRange {
                        name: format!("groups.{}.{}_min", g.id, what),
                        value: r.min,
                        range: "[0, inf)",
                    });
                }
                if r.min > r.max {
                    return Err(ParamError::InvertedRange {
                        group: g.id,
                        what,
                        lo: r.min,
                        hi: r.max,
                    });
                }
            }
        }
        let total: f64 = self.groups.iter().map(|g| g.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ParamError::FractionSum(total));
        }
        check_positive("mu_crd", self.credit_multiple)?;
        check_positive("amplitude", self.env_amplitude)?;
        check_unit("eta_rpy", self.repayment_rate, false)?;
        check_unit("rho_inv", self.invest_fraction, false)?;
        check_unit("rho_roi", self.roi_rate, false)?;
        let c = &self.control;
        check_unit("alpha.exp", c.expense, true)?;
        check_unit("alpha.env", c.environment, true)?;
        check_unit("alpha.tax", c.tax, true)?;
        check_unit("alpha.inc", c.income, true)?;
        check_unit("alpha.wlf", c.welfare, true)?;
        Ok(())
    }

    pub fn group(&self, id: GroupId) -> Option<&IncomeGroup> {
        self.groups.iter().find(|g| g.id == id)
    }

    /// Agent count per configured group, in `groups` order.
    ///
    /// Largest-remainder apportionment: floors first, then the leftover seats
    /// go to the largest fractional parts (earlier groups win ties).
    pub fn group_sizes(&self) -> Result<Vec<usize>, ParamError> {
        let n = self.agents;
        let quotas: Vec<f64> = self.groups.iter().map(|g| g.fraction * n as f64).collect();
        let mut sizes: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
        let assigned: usize = sizes.iter().sum();
        if assigned > n {
            return Err(ParamError::Apportionment { n });
        }
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - sizes[a] as f64;
            let rb = quotas[b] - sizes[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let leftover = n - assigned;
        if leftover > order.len() {
            return Err(ParamError::Apportionment { n });
        }
        for &k in order.iter().take(leftover) {
            sizes[k] += 1;
        }
        Ok(sizes)
    }
}

/// Which deteriorating factors are active in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub expense_growth: bool,
    pub env_decay: bool,
    pub tax_growth: bool,
    pub welfare_decay: bool,
    pub income_decay: bool,
    pub expense_baseline: ExpenseBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpenseBaseline {
    /// Expense is a share of the income earned this step.
    CurrentIncome,
    /// Expense is a share of the income drawn at t = 0.
    InitialIncome,
}

impl ScenarioConfig {
    pub const fn nested(level: u8, baseline: ExpenseBaseline) -> Self {
        ScenarioConfig {
            expense_growth: level >= 1,
            env_decay: level >= 2,
            tax_growth: level >= 3,
            welfare_decay: level >= 4,
            income_decay: level >= 5,
            expense_baseline: baseline,
        }
    }

    pub const NONE: ScenarioConfig = ScenarioConfig::nested(0, ExpenseBaseline::CurrentIncome);

    /// The six preset scenarios in order: 1, 2, 3, 4, 5a, 5b.
    pub fn presets() -> [ScenarioConfig; 6] {
        use ExpenseBaseline::*;
        [
            Self::nested(1, CurrentIncome),
            Self::nested(2, CurrentIncome),
            Self::nested(3, CurrentIncome),
            Self::nested(4, CurrentIncome),
            Self::nested(5, CurrentIncome),
            Self::nested(5, InitialIncome),
        ]
    }

    pub fn from_label(label: &str) -> Option<ScenarioConfig> {
        const LABELS: [&str; 6] = ["1", "2", "3", "4", "5a", "5b"];
        let label = label.trim();
        let label = if label == "5" { "5a" } else { label };
        LABELS
            .iter()
            .position(|&l| l == label)
            .map(|k| Self::presets()[k])
    }

    /// `"1"`..`"5b"` for presets, `"0"` when nothing deteriorates, `"custom"` otherwise.
    pub fn label(&self) -> &'static str {
        const LABELS: [&str; 6] = ["1", "2", "3", "4", "5a", "5b"];
        if *self == Self::NONE {
            return "0";
        }
        Self::presets()
            .iter()
            .position(|p| p == self)
            .map(|k| LABELS[k])
            .unwrap_or("custom")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub index: usize,
    pub group: GroupId,
    pub net_balance: f64,
    /// Savings kept after investing (X_rem).
    pub savings: f64,
    pub roi_pool: f64,
    pub credit_limit: f64,
    pub credit_remaining: f64,
    pub credit_drawn: f64,
    pub credit_repaid: f64,
    pub inherited: f64,
    /// Income drawn at t = 0.
    pub income_baseline: f64,
    pub stressed: bool,
}

impl AgentState {
    pub fn new(
        index: usize,
        group: GroupId,
        income_baseline: f64,
        inherited: f64,
        credit_multiple: f64,
    ) -> Self {
        let limit = credit_multiple * income_baseline;
        AgentState {
            index,
            group,
            net_balance: 0.0,
            savings: 0.0,
            roi_pool: 0.0,
            credit_limit: limit,
            credit_remaining: limit,
            credit_drawn: 0.0,
            credit_repaid: 0.0,
            inherited,
            income_baseline,
            stressed: false,
        }
    }

    pub fn outstanding_debt(&self) -> f64 {
        (self.credit_drawn - self.credit_repaid).max(0.0)
    }

    pub fn prefers_credit(&self) -> bool {
        self.index.is_multiple_of(2)
    }
}

/// Flows of one agent during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlowRecord {
    pub income: f64,
    pub welfare: f64,
    pub env_utility: f64,
    pub expense: f64,
    pub tax: f64,
    pub savings: f64,
    pub repayment: f64,
    pub investment: f64,
}

/// Builds the initial population. Agents are laid out in group blocks in
/// `params.groups` order; each consumes two draws (income, then inheritance).
pub fn build_population(
    params: &ModelParams,
    rng: &mut SimRng,
) -> Result<Vec<AgentState>, ParamError> {
    params.validate()?;
    let sizes = params.group_sizes()?;
    let mut agents = Vec::with_capacity(params.agents);
    for (group, &size) in params.groups.iter().zip(&sizes) {
        for _ in 0..size {
            let income = group.income.draw(rng);
            let inherited = group.inherited.draw(rng);
            agents.push(AgentState::new(
                agents.len(),
                group.id,
                income,
                inherited,
                params.credit_multiple,
            ));
        }
    }
    Ok(agents)
}
