//! Aggregate series over the population and their display normalisation.

use crate::model::{AgentState, FlowRecord, GroupId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: u32,
    /// Net balance amount.
    pub nba: f64,
    /// Remaining savings left.
    pub rsl: f64,
    /// Number of stressed agents.
    pub nsa: usize,
    pub roi: f64,
    /// Remaining credit limit.
    pub rcl: f64,
    /// Remaining inherited assets.
    pub ria: f64,
    /// Total stressed credit: drawn minus repaid.
    pub tsc: f64,
    /// Savings after all expenses, signed.
    pub sae: f64,
    /// Stressed agents per group, indexed by [`GroupId::index`].
    pub nsa_by_group: [usize; 3],
}

/// Sum that does not depend on the order of its inputs.
fn order_free_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.into_iter().sum()
}

/// Folds a post-policy population snapshot into one record.
pub fn compute_metrics(population: &[AgentState], flows: &[FlowRecord], t: u32) -> MetricsRecord {
    let sum = |f: &dyn Fn(&AgentState) -> f64| order_free_sum(population.iter().map(f).collect());
    let mut nsa_by_group = [0usize; 3];
    for a in population.iter().filter(|a| a.stressed) {
        nsa_by_group[a.group.index()] += 1;
    }
    MetricsRecord {
        t,
        nba: sum(&|a| a.net_balance),
        rsl: sum(&|a| a.savings),
        nsa: nsa_by_group.iter().sum(),
        roi: sum(&|a| a.roi_pool),
        rcl: sum(&|a| a.credit_remaining),
        ria: sum(&|a| a.inherited),
        tsc: sum(&|a| a.credit_drawn - a.credit_repaid),
        sae: order_free_sum(flows.iter().map(|f| f.savings).collect()),
        nsa_by_group,
    }
}

/// The exported series, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Nba,
    Rsl,
    Nsa,
    Roi,
    Rcl,
    Ria,
    Tsc,
    Sae,
    NsaHigh,
    NsaMid,
    NsaLow,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Nba,
        Metric::Rsl,
        Metric::Nsa,
        Metric::Roi,
        Metric::Rcl,
        Metric::Ria,
        Metric::Tsc,
        Metric::Sae,
        Metric::NsaHigh,
        Metric::NsaMid,
        Metric::NsaLow,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Metric::Nba => "NBA",
            Metric::Rsl => "RSL",
            Metric::Nsa => "NSA",
            Metric::Roi => "ROI",
            Metric::Rcl => "RCL",
            Metric::Ria => "RIA",
            Metric::Tsc => "TSC",
            Metric::Sae => "SAE",
            Metric::NsaHigh => "NSA_high",
            Metric::NsaMid => "NSA_mid",
            Metric::NsaLow => "NSA_low",
        }
    }

    pub fn from_column(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.column() == name)
    }

    pub fn is_count(self) -> bool {
        matches!(
            self,
            Metric::Nsa | Metric::NsaHigh | Metric::NsaMid | Metric::NsaLow
        )
    }

    /// Upper end of the display range; every range starts at 0.
    /// Group counts share the NSA range.
    pub fn display_ceiling(self) -> f64 {
        match self {
            Metric::Nba => 1.0,
            Metric::Rsl => 0.9,
            Metric::Nsa | Metric::NsaHigh | Metric::NsaMid | Metric::NsaLow => 0.8,
            Metric::Roi => 0.7,
            Metric::Rcl => 0.6,
            Metric::Ria => 0.5,
            Metric::Tsc => 0.4,
            Metric::Sae => 0.3,
        }
    }

    pub fn value(self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::Nba => r.nba,
            Metric::Rsl => r.rsl,
            Metric::Nsa => r.nsa as f64,
            Metric::Roi => r.roi,
            Metric::Rcl => r.rcl,
            Metric::Ria => r.ria,
            Metric::Tsc => r.tsc,
            Metric::Sae => r.sae,
            Metric::NsaHigh => r.nsa_by_group[GroupId::High.index()] as f64,
            Metric::NsaMid => r.nsa_by_group[GroupId::Medium.index()] as f64,
            Metric::NsaLow => r.nsa_by_group[GroupId::Low.index()] as f64,
        }
    }

    pub fn series(self, records: &[MetricsRecord]) -> Vec<f64> {
        records.iter().map(|r| self.value(r)).collect()
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.column())
    }
}

/// Affine min-max map of the whole series onto `[lo, hi]`.
/// A constant series maps to `lo` everywhere.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN span counts as flat
pub fn normalize_series(series: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) {
        return vec![lo; series.len()];
    }
    series
        .iter()
        .map(|&x| {
            if x == max {
                hi
            } else {
                lo + (hi - lo) * (x - min) / span
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_population, rng_for_seed, ModelParams};
    use proptest::prelude::*;

    #[test]
    fn stressed_credit_is_drawn_minus_repaid() {
        let mut a = AgentState::new(0, GroupId::Medium, 1.0, 0.0, 10.0);
        a.credit_remaining = 4.0;
        a.credit_drawn = 6.0;
        a.credit_repaid = 2.0;
        let m = compute_metrics(&[a], &[FlowRecord::default()], 1);
        assert_eq!(m.tsc, 4.0);
        assert_eq!(m.rcl, 4.0);
    }

    #[test]
    fn fresh_population_has_no_stress_or_debt() {
        let p = ModelParams::default();
        let pop = build_population(&p, &mut rng_for_seed(4)).unwrap();
        let flows = vec![FlowRecord::default(); pop.len()];
        let m = compute_metrics(&pop, &flows, 0);
        assert_eq!(m.nsa, 0);
        assert_eq!(m.tsc, 0.0);
        let limits: f64 = pop.iter().map(|a| 10.0 * a.income_baseline).sum();
        assert!((m.rcl - limits).abs() < 1e-9);
    }

    #[test]
    fn counts_stressed_agents_by_group() {
        let mut a = AgentState::new(0, GroupId::Low, 2.0, 1.0, 10.0);
        a.stressed = true;
        let b = AgentState::new(1, GroupId::High, 9.0, 9.0, 10.0);
        let m = compute_metrics(&[a, b], &[FlowRecord::default(); 2], 3);
        assert_eq!(m.nsa, 1);
        assert_eq!(m.nsa_by_group, [0, 0, 1]);
        assert_eq!(Metric::NsaLow.value(&m), 1.0);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_series(&[0.0, 5.0, 10.0], 0.0, 1.0),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(normalize_series(&[7.0, 7.0, 7.0], 0.0, 0.9), vec![0.0; 3]);
        let n = normalize_series(&[-2.0, 0.0, 2.0], 0.0, 0.4);
        assert_eq!(n[0], 0.0);
        assert!((n[1] - 0.2).abs() < 1e-15);
        assert_eq!(n[2], 0.4);
    }

    #[test]
    fn column_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(Metric::from_column(m.column()), Some(m));
        }
    }

    proptest! {
        #[test]
        fn normalized_values_stay_in_range_and_keep_extrema(
            series in prop::collection::vec(-1e6f64..1e6, 1..60),
            hi in 0.1f64..2.0,
        ) {
            let out = normalize_series(&series, 0.0, hi);
            prop_assert!(out.iter().all(|&v| (0.0..=hi).contains(&v)));
            let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).unwrap().0;
            let argmin = |v: &[f64]| v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0))).unwrap().0;
            if series.iter().any(|&x| x != series[0]) {
                prop_assert_eq!(argmax(&out), argmax(&series));
                prop_assert_eq!(argmin(&out), argmin(&series));
            }
        }

        #[test]
        fn metrics_do_not_depend_on_agent_order(seed in 0u64..500, rotate in 0usize..100) {
            let p = ModelParams {
                agents: 40,
                ..ModelParams::default()
            };
            let mut pop = build_population(&p, &mut rng_for_seed(seed)).unwrap();
            for (k, a) in pop.iter_mut().enumerate() {
                a.net_balance = (k as f64 * 1.37).sin() * 1e3;
                a.stressed = a.net_balance < 0.0;
                a.credit_drawn = (k % 7) as f64 * 0.3;
            }
            let flows: Vec<FlowRecord> = (0..pop.len())
                .map(|k| FlowRecord { savings: (k as f64).cos() * 3.3, ..Default::default() })
                .collect();
            let base = compute_metrics(&pop, &flows, 5);
            let r = rotate % pop.len();
            pop.rotate_left(r);
            let mut flows = flows;
            flows.rotate_left(r);
            pop.reverse();
            flows.reverse();
            prop_assert_eq!(compute_metrics(&pop, &flows, 5), base);
        }
    }
}
