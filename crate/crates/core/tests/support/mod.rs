//! Straight-line transcription of the model, written against the equations
//! directly and sharing nothing with the crate except the random stream
//! contract: ChaCha8 seeded from the run seed, one `f64` per draw, mapped to
//! `lo + (hi - lo) * u`. Draw order: income then inheritance per agent at
//! t = 0; income then welfare per agent at every step.

#![allow(dead_code)]

use econdyn::model::{ExpenseBaseline, ModelParams, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAgent {
    pub group: usize,
    pub xnet: f64,
    pub xrem: f64,
    pub iroi: f64,
    pub icrd: f64,
    pub drawn: f64,
    pub repaid: f64,
    pub iinh: f64,
    pub inc0: f64,
    pub stressed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStep {
    pub nba: f64,
    pub rsl: f64,
    pub nsa: usize,
    pub roi: f64,
    pub rcl: f64,
    pub ria: f64,
    pub tsc: f64,
    pub sae: f64,
    pub nsa_by_group: [usize; 3],
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    lo + (hi - lo) * u
}

/// Agents per configured group by largest remainder, ties to the earlier group.
fn apportion(fractions: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut left = n - sizes.iter().sum::<usize>();
    while left > 0 {
        let mut best = 0;
        let mut best_rem = f64::NEG_INFINITY;
        for k in 0..sizes.len() {
            let rem = quotas[k] - sizes[k] as f64;
            if rem > best_rem {
                best = k;
                best_rem = rem;
            }
        }
        sizes[best] += 1;
        left -= 1;
    }
    sizes
}

pub fn simulate(
    p: &ModelParams,
    sc: &ScenarioConfig,
    seed: u64,
) -> (Vec<OracleStep>, Vec<OracleAgent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fractions: Vec<f64> = p.groups.iter().map(|g| g.fraction).collect();
    let sizes = apportion(&fractions, p.agents);

    let mut agents = Vec::new();
    for (k, g) in p.groups.iter().enumerate() {
        for _ in 0..sizes[k] {
            let inc0 = draw(&mut rng, g.income.min, g.income.max);
            let inh = draw(&mut rng, g.inherited.min, g.inherited.max);
            agents.push(OracleAgent {
                group: k,
                xnet: 0.0,
                xrem: 0.0,
                iroi: 0.0,
                icrd: p.credit_multiple * inc0,
                drawn: 0.0,
                repaid: 0.0,
                iinh: inh,
                inc0,
                stressed: false,
            });
        }
    }

    let big_t = p.horizon as f64;
    let a = p.env_amplitude;
    let ae = p.control.environment;
    let smin = (ae * (1.0 - big_t / 2.0)).sinh();
    let smax = (ae * (big_t - big_t / 2.0)).sinh();

    let mut out = Vec::new();
    for step in 1..=p.horizon {
        let t = step as f64;
        let mut xs = Vec::new();
        for ag in &agents {
            let g = &p.groups[ag.group];
            let xi = draw(&mut rng, g.income.min, g.income.max);
            let xw = draw(&mut rng, g.welfare.min, g.welfare.max);
            xs.push((xi, xw));
        }
        let mut sae = 0.0;
        for (i, ag) in agents.iter_mut().enumerate() {
            let g = &p.groups[ag.group];
            let (xi, xw) = xs[i];

            // income and welfare erosion, clamped so the multiplier stays >= 0
            let mut i_inc = xi;
            if sc.income_decay {
                let m = 1.0 - p.control.income * t / big_t;
                i_inc = if m > 0.0 { m * xi } else { 0.0 };
            }
            let mut i_wlf = xw;
            if sc.welfare_decay {
                let m = 1.0 - p.control.welfare * t / big_t;
                i_wlf = if m > 0.0 { m * xw } else { 0.0 };
            }
            // environment: A - 2A * (s - smin) / (smax - smin)
            let mut i_env = a;
            if sc.env_decay && smax - smin > 0.0 {
                let s = (ae * (t - big_t / 2.0)).sinh();
                i_env = a - 2.0 * a * (s - smin) / (smax - smin);
            }
            let base = if sc.expense_baseline == ExpenseBaseline::InitialIncome {
                ag.inc0
            } else {
                i_inc
            };
            let o_exp = if sc.expense_growth {
                (1.0 + p.control.expense * t) * g.expense_rate * base
            } else {
                g.expense_rate * base
            };
            let o_tax = if sc.tax_growth {
                (1.0 + p.control.tax * t / big_t) * g.tax_rate * i_inc
            } else {
                g.tax_rate * i_inc
            };

            let mut o_sav = i_inc - o_tax - o_exp;
            let o_rpy = p.repayment_rate * (ag.drawn - ag.repaid);
            o_sav -= o_rpy;
            ag.repaid += o_rpy;
            if o_sav > 0.0 {
                let x_inv = p.invest_fraction * o_sav;
                ag.iroi += p.roi_rate * x_inv;
                ag.xrem += (1.0 - p.invest_fraction) * o_sav;
            }
            ag.xnet = ag.xnet + i_env + i_wlf + ag.iroi + ag.xrem - o_sav.abs();
            sae += o_sav;

            // balancing cascade
            if ag.xnet < 0.0 {
                if ag.xrem > 0.0 {
                    let deficit = -ag.xnet;
                    if ag.xrem > deficit {
                        ag.xrem -= deficit;
                        ag.xnet += deficit;
                    } else {
                        ag.xnet += ag.xrem;
                        ag.xrem = 0.0;
                    }
                }
                if ag.xnet < 0.0 {
                    let deficit = -ag.xnet;
                    if ag.iroi > deficit {
                        ag.iroi -= deficit;
                        ag.xnet += deficit;
                    } else {
                        ag.xnet += ag.iroi;
                        ag.iroi = 0.0;
                    }
                }
                if ag.xnet < 0.0 {
                    let deficit = -ag.xnet;
                    if i % 2 == 0 {
                        if ag.icrd > deficit {
                            ag.icrd -= deficit;
                            ag.drawn += deficit;
                            ag.xnet += deficit;
                        } else {
                            ag.xnet += ag.icrd;
                            ag.drawn += ag.icrd;
                            ag.icrd = 0.0;
                        }
                    } else if ag.iinh > deficit {
                        ag.iinh -= deficit;
                        ag.xnet += deficit;
                    } else {
                        ag.xnet += ag.iinh;
                        ag.iinh = 0.0;
                    }
                }
            }
            ag.stressed = ag.xnet < 0.0;
        }

        let mut rec = OracleStep {
            nba: 0.0,
            rsl: 0.0,
            nsa: 0,
            roi: 0.0,
            rcl: 0.0,
            ria: 0.0,
            tsc: 0.0,
            sae,
            nsa_by_group: [0; 3],
        };
        for ag in &agents {
            rec.nba += ag.xnet;
            rec.rsl += ag.xrem;
            rec.roi += ag.iroi;
            rec.rcl += ag.icrd;
            rec.ria += ag.iinh;
            rec.tsc += ag.drawn - ag.repaid;
            if ag.stressed {
                rec.nsa += 1;
                rec.nsa_by_group[p.groups[ag.group].id.index()] += 1;
            }
        }
        out.push(rec);
    }
    (out, agents)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
