//! Conditional-return statistics for a single trading rule: conditional
//! means, t-statistics against the unconditional mean and between the long
//! and short sides, dispersions, positive fractions, and Sharpe ratios.
//!
//! A position fixed at the close of day t earns the return of day t+1.
//! Return index j of a [`ReturnSeries`] is the return of price-day j+1, so
//! the return at index j is attributed to the position at price-day j.

use serde::Serialize;
use thiserror::Error;

use crate::market_data::ReturnSeries;
use crate::rule_engine::{PositionSeries, RuleSpec};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("evaluation start {start} out of range for {returns} return observations")]
    EvalStartOutOfRange { start: usize, returns: usize },
    #[error("positions ({positions}) do not align with returns ({returns})")]
    LengthMismatch { positions: usize, returns: usize },
}

/// Log returns partitioned by the position held on the preceding day.
#[derive(Debug, Clone)]
pub struct ConditionalSample {
    pub long_returns: Vec<f64>,
    pub short_returns: Vec<f64>,
    /// Total return observations in the evaluation window.
    pub total: usize,
    /// Unconditional mean return over the evaluation window.
    pub mean: f64,
    /// Unconditional sample variance over the evaluation window.
    pub variance: f64,
}

impl ConditionalSample {
    pub fn n_long(&self) -> usize {
        self.long_returns.len()
    }

    pub fn n_short(&self) -> usize {
        self.short_returns.len()
    }
}

/// Partition the log returns of days `eval_start..` by the position held at
/// the previous close. `eval_start` is a price-day index (>= 1); using the
/// same start for every rule keeps all rows comparable.
pub fn align_returns(
    returns: &ReturnSeries,
    positions: &PositionSeries,
    eval_start: usize,
) -> Result<ConditionalSample, StatsError> {
    if positions.len() != returns.len() + 1 {
        return Err(StatsError::LengthMismatch {
            positions: positions.len(),
            returns: returns.len(),
        });
    }
    if eval_start < 1 || eval_start > returns.len() {
        return Err(StatsError::EvalStartOutOfRange {
            start: eval_start,
            returns: returns.len(),
        });
    }
    let log = returns.log_returns();
    let mut long_returns = Vec::new();
    let mut short_returns = Vec::new();
    // the return at index j (return of day j+1) pairs with the position on day j
    for j in eval_start - 1..log.len() {
        match positions.positions()[j] {
            1 => long_returns.push(log[j]),
            -1 => short_returns.push(log[j]),
            _ => {}
        }
    }
    let window = &log[eval_start - 1..];
    let total = window.len();
    let mean = window.iter().sum::<f64>() / total as f64;
    let variance = if total > 1 {
        window.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (total - 1) as f64
    } else {
        f64::NAN
    };
    Ok(ConditionalSample { long_returns, short_returns, total, mean, variance })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// t-statistics of the conditional means against the unconditional mean.
/// An empty side yields NaN.
pub fn t_stats(sample: &ConditionalSample) -> (f64, f64) {
    let one_side = |side: &[f64]| {
        if side.is_empty() {
            return f64::NAN;
        }
        let mu_side = mean(side);
        (mu_side - sample.mean)
            / (sample.variance / side.len() as f64 + sample.variance / sample.total as f64).sqrt()
    };
    (one_side(&sample.long_returns), one_side(&sample.short_returns))
}

/// t-statistic of the long mean against the short mean. NaN if either side
/// is empty.
pub fn t_stat_long_short(sample: &ConditionalSample) -> f64 {
    if sample.long_returns.is_empty() || sample.short_returns.is_empty() {
        return f64::NAN;
    }
    let mu_l = mean(&sample.long_returns);
    let mu_s = mean(&sample.short_returns);
    (mu_l - mu_s)
        / (sample.variance / sample.n_long() as f64 + sample.variance / sample.n_short() as f64)
            .sqrt()
}

/// Sharpe ratios of the conditional samples against a constant daily
/// risk-free rate. Empty or zero-dispersion sides yield NaN.
pub fn sharpe_ratios(sample: &ConditionalSample, risk_free: f64) -> (f64, f64) {
    let one_side = |side: &[f64]| {
        let sd = sample_std(side);
        if !(sd > 0.0) {
            return f64::NAN;
        }
        (mean(side) - risk_free) / sd
    };
    (one_side(&sample.long_returns), one_side(&sample.short_returns))
}

/// Fraction of strictly positive returns on each side (zeros count as
/// not-positive). Empty sides yield NaN.
pub fn positive_fraction(sample: &ConditionalSample) -> (f64, f64) {
    let one_side = |side: &[f64]| {
        if side.is_empty() {
            return f64::NAN;
        }
        side.iter().filter(|&&r| r > 0.0).count() as f64 / side.len() as f64
    };
    (one_side(&sample.long_returns), one_side(&sample.short_returns))
}

/// Two-sided significance stars under the normal approximation:
/// `*` 10%, `**` 5%, `***` 1%.
pub fn significance_stars(t: f64) -> &'static str {
    const Z10: f64 = 1.6448536269514722;
    const Z05: f64 = 1.959963984540054;
    const Z01: f64 = 2.5758293035489004;
    let a = t.abs();
    if a.is_nan() {
        ""
    } else if a > Z01 {
        "***"
    } else if a > Z05 {
        "**"
    } else if a > Z10 {
        "*"
    } else {
        ""
    }
}

/// One full report row for a rule. Values are stored unscaled; display
/// scaling happens only when tables are emitted.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalStats {
    pub rule: String,
    pub n_long: usize,
    pub n_short: usize,
    pub mu_long: f64,
    pub mu_short: f64,
    pub delta_mu: f64,
    pub t_long: f64,
    pub t_short: f64,
    pub t_long_short: f64,
    pub sigma_long: f64,
    pub sigma_short: f64,
    pub p_long: f64,
    pub p_short: f64,
    pub sharpe_long: f64,
    pub sharpe_short: f64,
}

/// Compose the full row from the aligned sample.
pub fn evaluate_rule(
    rule: &RuleSpec,
    returns: &ReturnSeries,
    positions: &PositionSeries,
    eval_start: usize,
    risk_free: f64,
) -> Result<ConditionalStats, StatsError> {
    let sample = align_returns(returns, positions, eval_start)?;
    let (t_long, t_short) = t_stats(&sample);
    let t_long_short = t_stat_long_short(&sample);
    let (p_long, p_short) = positive_fraction(&sample);
    let (sharpe_long, sharpe_short) = sharpe_ratios(&sample, risk_free);
    let mu_long = mean(&sample.long_returns);
    let mu_short = mean(&sample.short_returns);
    Ok(ConditionalStats {
        rule: rule.to_string(),
        n_long: sample.n_long(),
        n_short: sample.n_short(),
        mu_long,
        mu_short,
        delta_mu: mu_long - mu_short,
        t_long,
        t_short,
        t_long_short,
        sigma_long: sample_std(&sample.long_returns),
        sigma_short: sample_std(&sample.short_returns),
        p_long,
        p_short,
        sharpe_long,
        sharpe_short,
    })
}
