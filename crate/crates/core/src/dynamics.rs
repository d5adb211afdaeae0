//! Time-varying exogenous quantities. All functions are pure.
//!
//! An inactive factor is held at its t = 0 value: multipliers stay at 1 and
//! the environment keeps delivering its peak utility. Multipliers that would
//! turn negative are clamped at zero.

/// Income after linear erosion: `[1 - alpha * t / T] * draw`.
pub fn income_at(draw: f64, alpha: f64, t: u32, horizon: u32, active: bool) -> f64 {
    if !active {
        return draw;
    }
    decay_multiplier(alpha, t, horizon) * draw
}

/// Expense as a growing share of `income_for_expense`: `[1 + alpha * t] * gamma * income`.
///
/// `income_for_expense` is either this step's income or the t = 0 draw,
/// depending on the scenario's expense baseline.
pub fn expense_at(
    income_for_expense: f64,
    expense_rate: f64,
    alpha: f64,
    t: u32,
    active: bool,
) -> f64 {
    let growth = if active {
        1.0 + alpha * f64::from(t)
    } else {
        1.0
    };
    growth * expense_rate * income_for_expense
}

/// Direct tax: `[1 + alpha * t / T] * delta * income`.
pub fn tax_at(income: f64, tax_rate: f64, alpha: f64, t: u32, horizon: u32, active: bool) -> f64 {
    let growth = if active {
        1.0 + alpha * f64::from(t) / f64::from(horizon)
    } else {
        1.0
    };
    growth * tax_rate * income
}

/// Welfare after linear withdrawal: `[1 - alpha * t / T] * draw`.
pub fn welfare_at(draw: f64, alpha: f64, t: u32, horizon: u32, active: bool) -> f64 {
    if !active {
        return draw;
    }
    decay_multiplier(alpha, t, horizon) * draw
}

fn decay_multiplier(alpha: f64, t: u32, horizon: u32) -> f64 {
    (1.0 - alpha * f64::from(t) / f64::from(horizon)).max(0.0)
}

/// Environment utility on a decreasing hyperbolic-sine S-curve.
///
/// `s(t) = sinh(alpha * (t - T/2))` is min-max normalised over `t = 1..=T`
/// and mapped so the curve runs from `+A` at `t = 1` to `-A` at `t = T`.
/// Since `sinh` is increasing, the extremes sit at the two ends of the
/// horizon and the normalisation is O(1). With `alpha == 0` or `T == 1` the
/// curve is degenerate and `+A` is returned.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN span counts as degenerate
pub fn env_utility_at(amplitude: f64, alpha: f64, t: u32, horizon: u32, active: bool) -> f64 {
    if !active {
        return amplitude;
    }
    let half = f64::from(horizon) / 2.0;
    let s = |step: f64| (alpha * (step - half)).sinh();
    let lo = s(1.0);
    let hi = s(f64::from(horizon));
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return amplitude;
    }
    let scaled = (s(f64::from(t)) - lo) / span;
    amplitude - 2.0 * amplitude * scaled
}

/// True when an active environment curve cannot be normalised.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn env_curve_is_degenerate(alpha: f64, horizon: u32) -> bool {
    let half = f64::from(horizon) / 2.0;
    let span = (alpha * (f64::from(horizon) - half)).sinh() - (alpha * (1.0 - half)).sinh();
    !(span > 0.0) || !span.is_finite()
}
