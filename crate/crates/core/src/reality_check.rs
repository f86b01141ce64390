//! White's Reality Check: rule-vs-benchmark performance series, stationary
//! bootstrap resampling, and the data-snooping-corrected p-value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::market_data::ReturnSeries;
use crate::rule_engine::PositionSeries;

#[derive(Debug, Error)]
pub enum WrcError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-positive log argument on day {day} (rule {rule}): return and cost wipe out the position")]
    NonPositiveLogArgument { day: usize, rule: String },
    #[error("evaluation window empty: start {start}, last return day {last}")]
    EmptyWindow { start: usize, last: usize },
    #[error("performance matrix is empty")]
    EmptyMatrix,
}

/// Bootstrap and evaluation-window configuration.
#[derive(Debug, Clone, Serialize)]
pub struct WrcConfig {
    /// First evaluation day (price-day index).
    pub eval_start: usize,
    /// Stationary-bootstrap smoothing parameter; mean block length is its
    /// reciprocal.
    pub smoothing: f64,
    /// One-way transaction cost rate.
    pub cost: f64,
    /// Bootstrap replications.
    pub replications: usize,
    pub short_allowed: bool,
    pub seed: u64,
}

impl Default for WrcConfig {
    fn default() -> Self {
        Self {
            eval_start: 201,
            smoothing: 0.1,
            cost: 0.0,
            replications: 500,
            short_allowed: true,
            seed: 0,
        }
    }
}

impl WrcConfig {
    pub fn validate(&self) -> Result<(), WrcError> {
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(WrcError::InvalidConfig(format!(
                "smoothing must be in (0, 1], got {}",
                self.smoothing
            )));
        }
        if self.cost < 0.0 {
            return Err(WrcError::InvalidConfig("cost must be >= 0".into()));
        }
        if self.replications < 1 {
            return Err(WrcError::InvalidConfig("replications must be >= 1".into()));
        }
        if self.eval_start < 1 {
            return Err(WrcError::InvalidConfig("eval start must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-rule daily performance relative to the benchmark over the
/// evaluation window.
#[derive(Debug, Clone)]
pub struct PerformanceMatrix {
    rows: Vec<Vec<f64>>,
    days: usize,
}

impl PerformanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, WrcError> {
        let days = rows.first().map(|r| r.len()).ok_or(WrcError::EmptyMatrix)?;
        if days == 0 || rows.iter().any(|r| r.len() != days) {
            return Err(WrcError::InvalidConfig("ragged or empty performance rows".into()));
        }
        Ok(Self { rows, days })
    }

    pub fn rules(&self) -> usize {
        self.rows.len()
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Daily log-relative performance of one rule against the benchmark,
/// with a proportional cost per unit of position change. Positions are
/// applied with a one-day lag: the position fixed at close of day d-1
/// earns the return of day d.
pub fn performance_series(
    returns: &ReturnSeries,
    rule_positions: &PositionSeries,
    benchmark: &PositionSeries,
    cost: f64,
    eval_start: usize,
    rule_label: &str,
) -> Result<Vec<f64>, WrcError> {
    let last_day = returns.len();
    if eval_start > last_day {
        return Err(WrcError::EmptyWindow { start: eval_start, last: last_day });
    }
    let rel = returns.relative_returns();
    let pos = rule_positions.positions();
    let bench = benchmark.positions();
    let pos_at = |idx: isize| if idx < 0 { 0.0 } else { pos[idx as usize] as f64 };
    let mut out = Vec::with_capacity(last_day - eval_start + 1);
    for day in eval_start..=last_day {
        let y = rel[day - 1];
        let held = pos_at(day as isize - 1);
        let prev = pos_at(day as isize - 2);
        let arg = 1.0 + y * held - cost * (held - prev).abs();
        if arg <= 0.0 {
            return Err(WrcError::NonPositiveLogArgument { day, rule: rule_label.to_string() });
        }
        let bench_arg = 1.0 + y * bench[day - 1] as f64;
        if bench_arg <= 0.0 {
            return Err(WrcError::NonPositiveLogArgument { day, rule: "benchmark".into() });
        }
        out.push(arg.ln() - bench_arg.ln());
    }
    Ok(out)
}

pub fn mean_performance(row: &[f64]) -> f64 {
    row.iter().sum::<f64>() / row.len() as f64
}

/// One stationary-bootstrap index sequence of length `n` over `0..n`:
/// geometric blocks with mean length `1/q`, wrapping at the end.
pub fn stationary_bootstrap_indices<R: Rng>(n: usize, q: f64, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut i = rng.gen_range(0..n);
    out.push(i);
    for _ in 1..n {
        let u: f64 = rng.gen();
        if u < q {
            i = rng.gen_range(0..n);
        } else {
            i += 1;
            if i >= n {
                i = 0;
            }
        }
        out.push(i);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct WrcResult {
    pub mean_performances: Vec<f64>,
    pub v_bar: f64,
    pub best_rule: usize,
    pub p_value: f64,
    pub config: WrcConfig,
}

// One RNG substream per replication, so parallel and serial runs agree.
fn replication_rng(seed: u64, replication: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64 + 1);
    rng
}

/// Resampled per-rule mean performances, one row of length K per
/// replication. The same index sequence is applied to every rule within a
/// replication, preserving cross-rule dependence.
fn bootstrap_means(matrix: &PerformanceMatrix, config: &WrcConfig) -> Vec<Vec<f64>> {
    let n = matrix.days();
    (0..config.replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = replication_rng(config.seed, b);
            let indices = stationary_bootstrap_indices(n, config.smoothing, &mut rng);
            matrix
                .rows()
                .iter()
                .map(|row| {
                    let mut sum = 0.0;
                    for &i in &indices {
                        sum += row[i];
                    }
                    sum / n as f64
                })
                .collect()
        })
        .collect()
}

/// The Reality Check p-value for the full matrix.
pub fn wrc_pvalue(matrix: &PerformanceMatrix, config: &WrcConfig) -> Result<WrcResult, WrcError> {
    config.validate()?;
    let f_bar: Vec<f64> = matrix.rows().iter().map(|r| mean_performance(r)).collect();
    let sqrt_n = (matrix.days() as f64).sqrt();
    let (best_rule, best_mean) = f_bar
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let v_bar = sqrt_n * best_mean;

    let star_means = bootstrap_means(matrix, config);
    let exceed = star_means
        .iter()
        .filter(|means| {
            let v_star = means
                .iter()
                .zip(&f_bar)
                .map(|(star, bar)| sqrt_n * (star - bar))
                .fold(f64::NEG_INFINITY, f64::max);
            v_star > v_bar
        })
        .count();
    Ok(WrcResult {
        mean_performances: f_bar,
        v_bar,
        best_rule,
        p_value: exceed as f64 / config.replications as f64,
        config: config.clone(),
    })
}

/// p-values as a function of the number of rules considered, walking the
/// given ordering. The same bootstrap replications back every point.
pub fn wrc_curve(
    matrix: &PerformanceMatrix,
    config: &WrcConfig,
    order: &[usize],
) -> Result<Vec<(usize, f64)>, WrcError> {
    config.validate()?;
    if order.len() != matrix.rules() {
        return Err(WrcError::InvalidConfig("ordering must cover every rule".into()));
    }
    let f_bar: Vec<f64> = matrix.rows().iter().map(|r| mean_performance(r)).collect();
    let sqrt_n = (matrix.days() as f64).sqrt();
    let star_means = bootstrap_means(matrix, config);

    // running max over the ordering, both for the observed statistic and
    // for each replication's recentered statistic
    let mut best = f64::NEG_INFINITY;
    let mut star_best = vec![f64::NEG_INFINITY; star_means.len()];
    let mut curve = Vec::with_capacity(order.len());
    for (m, &k) in order.iter().enumerate() {
        best = best.max(sqrt_n * f_bar[k]);
        let mut exceed = 0usize;
        for (b, means) in star_means.iter().enumerate() {
            star_best[b] = star_best[b].max(sqrt_n * (means[k] - f_bar[k]));
            if star_best[b] > best {
                exceed += 1;
            }
        }
        curve.push((m + 1, exceed as f64 / config.replications as f64));
    }
    Ok(curve)
}
