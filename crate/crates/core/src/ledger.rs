//! Per-agent settlement of one step and the balancing policy.

use crate::model::{AgentState, FlowRecord, ModelParams};

/// Exogenous flows for one agent at one step, produced from the dynamics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Exogenous {
    pub income: f64,
    pub welfare: f64,
    pub env_utility: f64,
    pub expense: f64,
    pub tax: f64,
}

/// How much the balancing policy took from each source.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolicyDraws {
    pub savings: f64,
    pub roi: f64,
    pub credit: f64,
    pub inherited: f64,
}

impl PolicyDraws {
    pub fn total(&self) -> f64 {
        self.savings + self.roi + self.credit + self.inherited
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlementOutcome {
    pub flows: FlowRecord,
    pub draws: PolicyDraws,
    pub stressed: bool,
}

/// Repayment owed this step on the outstanding drawn credit.
pub fn repayment_due(agent: &AgentState, repayment_rate: f64) -> f64 {
    repayment_rate * agent.outstanding_debt()
}

/// Applies savings, repayment, investment and the net-balance update.
///
/// Order: savings = income - tax - expense; repayment is taken out of
/// savings; positive savings are split into investment and kept savings;
/// finally the net balance absorbs env + welfare + ROI pool + kept savings
/// minus |savings|. The stocks are re-added in full every step.
pub fn settle_flows(agent: &mut AgentState, exo: &Exogenous, params: &ModelParams) -> FlowRecord {
    let mut savings = exo.income - exo.tax - exo.expense;

    let repayment = repayment_due(agent, params.repayment_rate);
    savings -= repayment;
    agent.credit_repaid += repayment;

    let investment = if savings > 0.0 {
        let invested = params.invest_fraction * savings;
        agent.roi_pool += params.roi_rate * invested;
        agent.savings += (1.0 - params.invest_fraction) * savings;
        invested
    } else {
        0.0
    };

    agent.net_balance +=
        exo.env_utility + exo.welfare + agent.roi_pool + agent.savings - savings.abs();

    FlowRecord {
        income: exo.income,
        welfare: exo.welfare,
        env_utility: exo.env_utility,
        expense: exo.expense,
        tax: exo.tax,
        savings,
        repayment,
        investment,
    }
}

fn cover(deficit_holder: &mut f64, source: &mut f64) -> f64 {
    let taken = source.max(0.0).min(-*deficit_holder);
    *source -= taken;
    *deficit_holder += taken;
    taken
}

/// Covers a negative net balance from kept savings, then the ROI pool, then
/// credit (even index) or inherited assets (odd index). Each source is used
/// in full or until the deficit is gone. The agent is stressed when the
/// balance is still negative afterwards.
pub fn apply_balancing_policy(agent: &mut AgentState) -> (PolicyDraws, bool) {
    let mut draws = PolicyDraws::default();
    if agent.net_balance < 0.0 {
        draws.savings = cover(&mut agent.net_balance, &mut agent.savings);
    }
    if agent.net_balance < 0.0 {
        draws.roi = cover(&mut agent.net_balance, &mut agent.roi_pool);
    }
    if agent.net_balance < 0.0 {
        if agent.prefers_credit() {
            draws.credit = cover(&mut agent.net_balance, &mut agent.credit_remaining);
            agent.credit_drawn += draws.credit;
        } else {
            draws.inherited = cover(&mut agent.net_balance, &mut agent.inherited);
        }
    }
    agent.stressed = agent.net_balance < 0.0;
    (draws, agent.stressed)
}

/// One full step for one agent: settlement followed by the policy.
pub fn settle_agent(
    agent: &mut AgentState,
    exo: &Exogenous,
    params: &ModelParams,
) -> SettlementOutcome {
    let flows = settle_flows(agent, exo, params);
    let (draws, stressed) = apply_balancing_policy(agent);
    SettlementOutcome {
        flows,
        draws,
        stressed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupId;
    use proptest::prelude::*;

    fn agent(index: usize) -> AgentState {
        AgentState::new(index, GroupId::Low, 2.0, 0.0, 10.0)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn repayment_examples() {
        let mut a = agent(0);
        a.credit_drawn = 6.0;
        a.credit_repaid = 2.0;
        assert!(close(repayment_due(&a, 0.01), 0.04));
        a.credit_repaid = 6.0;
        assert_eq!(repayment_due(&a, 0.01), 0.0);
        assert_eq!(repayment_due(&agent(0), 0.01), 0.0);
    }

    #[test]
    fn settle_positive_savings_trace() {
        let params = ModelParams::default();
        let mut a = agent(0);
        let exo = Exogenous {
            income: 10.0,
            welfare: 1.5,
            env_utility: 10.0,
            expense: 2.5,
            tax: 3.5,
        };
        let f = settle_flows(&mut a, &exo, &params);
        assert!(close(f.savings, 4.0));
        assert!(close(f.investment, 2.0));
        assert!(close(a.roi_pool, 0.3));
        assert!(close(a.savings, 2.0));
        assert!(close(a.net_balance, 9.8));
        assert_eq!(f.repayment, 0.0);
    }

    #[test]
    fn settle_negative_savings_trace() {
        let params = ModelParams::default();
        let mut a = agent(1);
        let exo = Exogenous {
            income: 2.0,
            tax: 0.2,
            expense: 1.96,
            ..Default::default()
        };
        let f = settle_flows(&mut a, &exo, &params);
        assert!(close(f.savings, -0.16));
        assert_eq!(f.investment, 0.0);
        assert!(close(a.net_balance, -0.16));
        assert_eq!((a.savings, a.roi_pool), (0.0, 0.0));
    }

    #[test]
    fn zero_flows_re_add_stocks() {
        let params = ModelParams::default();
        let mut a = agent(0);
        a.savings = 2.0;
        a.roi_pool = 0.5;
        a.net_balance = 1.0;
        let before = a.clone();
        settle_flows(&mut a, &Exogenous::default(), &params);
        assert!(close(a.net_balance, 3.5));
        assert_eq!(a.savings, before.savings);
        assert_eq!(a.roi_pool, before.roi_pool);
    }

    #[test]
    fn repayment_reduces_savings_and_counts_as_repaid() {
        let params = ModelParams::default();
        let mut a = AgentState::new(0, GroupId::Low, 20.0, 0.0, 10.0);
        a.credit_drawn = 100.0;
        a.credit_remaining -= 100.0;
        let exo = Exogenous {
            income: 5.0,
            ..Default::default()
        };
        let f = settle_flows(&mut a, &exo, &params);
        assert!(close(f.repayment, 1.0));
        assert!(close(f.savings, 4.0));
        assert!(close(a.credit_repaid, 1.0));
        // the limit is not restored
        assert!(close(a.credit_remaining, 100.0));
    }

    #[test]
    fn policy_uses_savings_first() {
        let mut a = agent(0);
        a.net_balance = -5.0;
        a.savings = 10.0;
        let (draws, stressed) = apply_balancing_policy(&mut a);
        assert_eq!((a.savings, a.net_balance, stressed), (5.0, 0.0, false));
        assert_eq!(draws.savings, 5.0);
    }

    #[test]
    fn even_agent_partially_covered_by_credit_is_stressed() {
        let mut a = agent(0);
        a.net_balance = -5.0;
        a.credit_remaining = 3.0;
        let drawn_before = a.credit_drawn;
        let (_, stressed) = apply_balancing_policy(&mut a);
        assert_eq!(a.credit_remaining, 0.0);
        assert_eq!(a.credit_drawn - drawn_before, 3.0);
        assert_eq!(a.net_balance, -2.0);
        assert!(stressed && a.stressed);
    }

    #[test]
    fn non_negative_balance_is_left_alone() {
        let mut a = agent(3);
        a.savings = 4.0;
        let before = a.clone();
        let (draws, stressed) = apply_balancing_policy(&mut a);
        assert!(!stressed);
        assert_eq!(draws, PolicyDraws::default());
        assert_eq!(a, before);
    }

    #[test]
    fn odd_agent_cascades_into_inheritance() {
        let mut a = agent(1);
        a.net_balance = -4.0;
        a.savings = 1.0;
        a.roi_pool = 1.0;
        a.inherited = 10.0;
        let (_, stressed) = apply_balancing_policy(&mut a);
        assert_eq!((a.savings, a.roi_pool, a.inherited), (0.0, 0.0, 8.0));
        assert_eq!(a.net_balance, 0.0);
        assert!(!stressed);
        assert_eq!(a.credit_remaining, a.credit_limit);
    }

    #[test]
    fn odd_agent_never_touches_credit() {
        let mut a = agent(5);
        a.net_balance = -100.0;
        a.inherited = 1.0;
        apply_balancing_policy(&mut a);
        assert_eq!(a.credit_remaining, a.credit_limit);
        assert_eq!(a.inherited, 0.0);
        assert_eq!(a.net_balance, -99.0);
    }

    fn arb_agent() -> impl Strategy<Value = AgentState> {
        (
            0usize..1000,
            -200.0f64..200.0,
            0.0f64..50.0,
            0.0f64..50.0,
            0.0f64..100.0,
            0.0f64..1.0,
            0.0f64..30.0,
        )
            .prop_map(|(index, net, savings, roi, limit, used, inherited)| {
                let mut a = AgentState::new(index, GroupId::Medium, limit / 10.0, inherited, 10.0);
                a.net_balance = net;
                a.savings = savings;
                a.roi_pool = roi;
                a.credit_drawn = used * a.credit_limit;
                a.credit_remaining = a.credit_limit - a.credit_drawn;
                a
            })
    }

    proptest! {
        #[test]
        fn policy_conserves_money_and_never_grows_sources(mut a in arb_agent()) {
            let before = a.clone();
            let (draws, stressed) = apply_balancing_policy(&mut a);
            prop_assert!(a.net_balance >= before.net_balance);
            prop_assert!(a.savings <= before.savings);
            prop_assert!(a.roi_pool <= before.roi_pool);
            prop_assert!(a.credit_remaining <= before.credit_remaining);
            prop_assert!(a.inherited <= before.inherited);
            let gained = a.net_balance - before.net_balance;
            let spent = (before.savings - a.savings)
                + (before.roi_pool - a.roi_pool)
                + (before.credit_remaining - a.credit_remaining)
                + (before.inherited - a.inherited);
            prop_assert!((gained - spent).abs() <= 1e-9 * (1.0 + before.net_balance.abs()));
            prop_assert!((gained - draws.total()).abs() <= 1e-9 * (1.0 + before.net_balance.abs()));
            prop_assert!((a.credit_drawn - before.credit_drawn - draws.credit).abs() < 1e-12);
            prop_assert_eq!(stressed, a.net_balance < 0.0);
            if stressed {
                let preferred = if a.prefers_credit() { a.credit_remaining } else { a.inherited };
                prop_assert!(a.savings == 0.0 && a.roi_pool == 0.0 && preferred == 0.0);
            }
        }

        #[test]
        fn non_positive_savings_leave_stocks_alone(
            mut a in arb_agent(),
            income in 0.0f64..10.0,
            extra in 0.0f64..10.0,
        ) {
            a.credit_drawn = 0.0;
            let params = ModelParams::default();
            let exo = Exogenous { income, tax: 0.0, expense: income + extra, ..Default::default() };
            let (savings, roi) = (a.savings, a.roi_pool);
            let f = settle_flows(&mut a, &exo, &params);
            prop_assert!(f.savings <= 0.0);
            prop_assert_eq!(f.investment, 0.0);
            prop_assert_eq!(a.savings, savings);
            prop_assert_eq!(a.roi_pool, roi);
        }
    }
}
