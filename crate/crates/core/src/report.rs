//! Pipeline orchestration and report emission.
//!
//! Runs the full chain (load -> positions -> conditional stats -> Reality
//! Check grid) for every (q, cost, short-selling) combination and writes
//! the report tables and curve data as CSV/JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::conditional_stats::{evaluate_rule, significance_stars, ConditionalStats, StatsError};
use crate::market_data::{
    summary_stats, DataError, KurtosisConvention, PriceSeries, ReturnKind, SummaryStats,
};
use crate::reality_check::{
    performance_series, wrc_curve, wrc_pvalue, PerformanceMatrix, WrcConfig, WrcError,
};
use crate::rule_engine::{
    apply_short_constraint, compute_positions, generate_rule_grid, PositionSeries, RuleError,
    RuleSpec,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("data: cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("rule engine: {0}")]
    Rule(RuleError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("reality check: {0}")]
    Wrc(WrcError),
}

impl From<RuleError> for RunError {
    fn from(e: RuleError) -> Self {
        match e {
            RuleError::InvalidSpec(_) | RuleError::ParseError(_) => RunError::Config(e.to_string()),
            RuleError::SeriesTooShort { .. } => RunError::Rule(e),
        }
    }
}

impl From<WrcError> for RunError {
    fn from(e: WrcError) -> Self {
        match e {
            WrcError::InvalidConfig(_) => RunError::Config(e.to_string()),
            other => RunError::Wrc(other),
        }
    }
}

impl RunError {
    /// Process exit code: 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) | RunError::Io { .. } | RunError::Rule(_) | RunError::Stats(_) => 3,
            RunError::Wrc(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortSelling {
    No,
    Yes,
    Both,
}

impl ShortSelling {
    pub fn modes(self) -> Vec<bool> {
        match self {
            ShortSelling::No => vec![false],
            ShortSelling::Yes => vec![true],
            ShortSelling::Both => vec![false, true],
        }
    }
}

impl std::str::FromStr for ShortSelling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "no" | "false" => Ok(ShortSelling::No),
            "yes" | "true" => Ok(ShortSelling::Yes),
            "both" => Ok(ShortSelling::Both),
            other => Err(format!("expected no|yes|both, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("expected csv|json, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub cutoff: Option<NaiveDate>,
    /// None runs the full 48-rule grid.
    pub rule_selection: Option<Vec<String>>,
    pub risk_free: f64,
    pub costs: Vec<f64>,
    pub q_values: Vec<f64>,
    pub replications: usize,
    /// First evaluation day (price-day index).
    pub eval_start: usize,
    pub short_selling: ShortSelling,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_path: PathBuf::new(),
            cutoff: None,
            rule_selection: None,
            risk_free: 0.0,
            costs: vec![0.0, 0.003, 0.005, 0.01],
            q_values: vec![0.01, 0.1, 0.5, 1.0],
            replications: 500,
            eval_start: 201,
            short_selling: ShortSelling::Both,
            seed: 0,
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.input_path.as_os_str().is_empty() {
            return Err(RunError::Config("no input file given".into()));
        }
        if self.costs.is_empty() {
            return Err(RunError::Config("costs must be nonempty".into()));
        }
        if self.q_values.is_empty() {
            return Err(RunError::Config("q values must be nonempty".into()));
        }
        if self.formats.is_empty() {
            return Err(RunError::Config("formats must be nonempty".into()));
        }
        for &q in &self.q_values {
            if !(q > 0.0 && q <= 1.0) {
                return Err(RunError::Config(format!("q must be in (0, 1], got {q}")));
            }
        }
        for &c in &self.costs {
            if c < 0.0 {
                return Err(RunError::Config(format!("cost must be >= 0, got {c}")));
            }
        }
        if self.replications < 1 {
            return Err(RunError::Config("replications must be >= 1".into()));
        }
        if self.eval_start < 1 {
            return Err(RunError::Config("warmup must be >= 1".into()));
        }
        if let Some(rules) = &self.rule_selection {
            if rules.is_empty() {
                return Err(RunError::Config("rule selection is empty".into()));
            }
        }
        Ok(())
    }

    pub fn resolved_rules(&self) -> Result<Vec<RuleSpec>, RunError> {
        match &self.rule_selection {
            None => Ok(generate_rule_grid()),
            Some(labels) => labels
                .iter()
                .map(|l| l.parse::<RuleSpec>().map_err(RunError::from))
                .collect(),
        }
    }
}

/// Parse a flat `key = value` config file. Unknown keys are rejected.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Io { path: path.to_path_buf(), source: e })?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(RunError::Config(format!(
                "config line {}: expected `key = value`, got `{line}`",
                i + 1
            )));
        };
        let key = key.trim().to_string();
        const KNOWN: [&str; 12] = [
            "input", "cutoff", "cost", "q", "replications", "warmup", "seed", "risk-free",
            "short-selling", "rules", "out", "format",
        ];
        if !KNOWN.contains(&key.as_str()) {
            return Err(RunError::Config(format!("unknown config key `{key}`")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, Serialize)]
pub struct WrcCell {
    pub short_allowed: bool,
    pub cost: f64,
    pub q: f64,
    pub p_value: f64,
    pub v_bar: f64,
    pub best_rule: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSeries {
    pub cost: f64,
    pub short_allowed: bool,
    pub q: f64,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub timestamp: String,
    pub config: RunConfig,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub summary: SummaryStats,
    pub rows: Vec<ConditionalStats>,
    pub wrc_table: Vec<WrcCell>,
    pub curves: Vec<CurveSeries>,
    pub provenance: Provenance,
}

// Wall clock, unless SOURCE_DATE_EPOCH pins it for reproducible output.
fn timestamp() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok());
    let when = match epoch {
        Some(secs) => chrono::DateTime::from_timestamp(secs, 0).unwrap_or_else(chrono::Utc::now),
        None => chrono::Utc::now(),
    };
    when.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Execute the full pipeline described by `config` and write all report
/// files. Identical config and seed (with a pinned timestamp) produce
/// byte-identical outputs.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    config.validate()?;
    let report = compute(config)?;
    emit_tables(&report, &config.output_dir, &config.formats)?;
    Ok(report)
}

/// The pipeline without file output.
pub fn compute(config: &RunConfig) -> Result<RunReport, RunError> {
    config.validate()?;
    let bytes = fs::read(&config.input_path)
        .map_err(|e| RunError::Io { path: config.input_path.clone(), source: e })?;
    let mut series = PriceSeries::from_csv(bytes.as_slice())?;
    if let Some(cutoff) = config.cutoff {
        series = series.truncate_before(cutoff)?;
    }
    let returns = series.returns();
    if config.eval_start > returns.len() {
        return Err(RunError::Config(format!(
            "warmup {} exceeds the {} available return days",
            config.eval_start,
            returns.len()
        )));
    }
    let rules = config.resolved_rules()?;

    let summary = summary_stats(&returns, ReturnKind::Log, KurtosisConvention::Raw)?;

    let base_positions: Vec<PositionSeries> = rules
        .iter()
        .map(|spec| compute_positions(&series, spec))
        .collect::<Result<_, _>>()?;

    let rows: Vec<ConditionalStats> = rules
        .iter()
        .zip(&base_positions)
        .map(|(spec, pos)| {
            evaluate_rule(spec, &returns, pos, config.eval_start, config.risk_free)
        })
        .collect::<Result<_, _>>()?;

    let benchmark = PositionSeries::buy_and_hold(series.len());
    let curve_q = config.q_values[0];
    let mut wrc_table = Vec::new();
    let mut curves = Vec::new();
    for short_allowed in config.short_selling.modes() {
        let mode_positions: Vec<PositionSeries> = base_positions
            .iter()
            .map(|p| apply_short_constraint(p, short_allowed))
            .collect();
        for &cost in &config.costs {
            let rows_f: Vec<Vec<f64>> = rules
                .iter()
                .zip(&mode_positions)
                .map(|(spec, pos)| {
                    performance_series(
                        &returns,
                        pos,
                        &benchmark,
                        cost,
                        config.eval_start,
                        &spec.to_string(),
                    )
                })
                .collect::<Result<_, _>>()?;
            let matrix = PerformanceMatrix::new(rows_f)?;
            for &q in &config.q_values {
                let wrc_config = WrcConfig {
                    eval_start: config.eval_start,
                    smoothing: q,
                    cost,
                    replications: config.replications,
                    short_allowed,
                    seed: config.seed,
                };
                let result = wrc_pvalue(&matrix, &wrc_config)?;
                wrc_table.push(WrcCell {
                    short_allowed,
                    cost,
                    q,
                    p_value: result.p_value,
                    v_bar: result.v_bar,
                    best_rule: rules[result.best_rule].to_string(),
                });
            }
            let wrc_config = WrcConfig {
                eval_start: config.eval_start,
                smoothing: curve_q,
                cost,
                replications: config.replications,
                short_allowed,
                seed: config.seed,
            };
            let order: Vec<usize> = (0..rules.len()).collect();
            let points = wrc_curve(&matrix, &wrc_config, &order)?;
            curves.push(CurveSeries { cost, short_allowed, q: curve_q, points });
        }
    }

    Ok(RunReport {
        summary,
        rows,
        wrc_table,
        curves,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            timestamp: timestamp(),
            config: config.clone(),
        },
    })
}

/// Table 2/3-style row with the caption display scaling applied: returns
/// x1e4, dispersions and Sharpe ratios x1e2.
#[derive(Debug, Serialize)]
struct ScaledRow<'a> {
    rule: &'a str,
    n_long: usize,
    n_short: usize,
    mu_long_x1e4: f64,
    mu_short_x1e4: f64,
    delta_mu_x1e4: f64,
    sigma_long_x1e2: f64,
    sigma_short_x1e2: f64,
    p_long: f64,
    p_short: f64,
    sharpe_long_x1e2: f64,
    sharpe_short_x1e2: f64,
    sig_long: &'static str,
    sig_short: &'static str,
    sig_long_short: &'static str,
}

impl<'a> ScaledRow<'a> {
    fn from(row: &'a ConditionalStats) -> Self {
        Self {
            rule: &row.rule,
            n_long: row.n_long,
            n_short: row.n_short,
            mu_long_x1e4: row.mu_long * 1e4,
            mu_short_x1e4: row.mu_short * 1e4,
            delta_mu_x1e4: row.delta_mu * 1e4,
            sigma_long_x1e2: row.sigma_long * 1e2,
            sigma_short_x1e2: row.sigma_short * 1e2,
            p_long: row.p_long,
            p_short: row.p_short,
            sharpe_long_x1e2: row.sharpe_long * 1e2,
            sharpe_short_x1e2: row.sharpe_short * 1e2,
            sig_long: significance_stars(row.t_long),
            sig_short: significance_stars(row.t_short),
            sig_long_short: significance_stars(row.t_long_short),
        }
    }
}

#[derive(Debug, Serialize)]
struct WrcRow<'a> {
    short_selling: &'static str,
    cost: f64,
    q: f64,
    p_value: f64,
    v_bar: f64,
    best_rule: &'a str,
    significant_10pct: bool,
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|e| RunError::Io { path: path.to_path_buf(), source: e })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable report");
    out.push(b'\n');
    out
}

/// Write `summary.*`, `conditional_stats.*`, `wrc.*`, per-(cost, mode)
/// curve CSVs, and `provenance.json` into `dir`.
pub fn emit_tables(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io { path: dir.to_path_buf(), source: e })?;
    let csv_wanted = formats.contains(&Format::Csv);
    let json_wanted = formats.contains(&Format::Json);

    if csv_wanted {
        let mut out = String::from("statistic,value\n");
        let s = &report.summary;
        out.push_str(&format!("mean,{}\n", fmt_num(s.mean)));
        out.push_str(&format!("std,{}\n", fmt_num(s.std)));
        out.push_str(&format!("skew,{}\n", fmt_num(s.skew)));
        out.push_str(&format!("kurtosis,{}\n", fmt_num(s.kurtosis)));
        out.push_str(&format!("observations,{}\n", s.observations));
        write_file(&dir.join("summary.csv"), out.as_bytes())?;

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "rule",
            "n_long",
            "n_short",
            "mu_long_x1e4",
            "mu_short_x1e4",
            "delta_mu_x1e4",
            "sigma_long_x1e2",
            "sigma_short_x1e2",
            "p_long",
            "p_short",
            "sharpe_long_x1e2",
            "sharpe_short_x1e2",
            "sig_long",
            "sig_short",
            "sig_long_short",
        ])
        .expect("csv write");
        for row in &report.rows {
            let r = ScaledRow::from(row);
            w.write_record([
                r.rule.to_string(),
                r.n_long.to_string(),
                r.n_short.to_string(),
                fmt_num(r.mu_long_x1e4),
                fmt_num(r.mu_short_x1e4),
                fmt_num(r.delta_mu_x1e4),
                fmt_num(r.sigma_long_x1e2),
                fmt_num(r.sigma_short_x1e2),
                fmt_num(r.p_long),
                fmt_num(r.p_short),
                fmt_num(r.sharpe_long_x1e2),
                fmt_num(r.sharpe_short_x1e2),
                r.sig_long.to_string(),
                r.sig_short.to_string(),
                r.sig_long_short.to_string(),
            ])
            .expect("csv write");
        }
        write_file(
            &dir.join("conditional_stats.csv"),
            &w.into_inner().expect("csv flush"),
        )?;

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "short_selling",
            "cost",
            "q",
            "p_value",
            "v_bar",
            "best_rule",
            "significant_10pct",
        ])
        .expect("csv write");
        for cell in &report.wrc_table {
            w.write_record([
                if cell.short_allowed { "yes" } else { "no" }.to_string(),
                fmt_num(cell.cost),
                fmt_num(cell.q),
                fmt_num(cell.p_value),
                fmt_num(cell.v_bar),
                cell.best_rule.clone(),
                (cell.p_value < 0.1).to_string(),
            ])
            .expect("csv write");
        }
        write_file(&dir.join("wrc.csv"), &w.into_inner().expect("csv flush"))?;

        for curve in &report.curves {
            let mode = if curve.short_allowed { "short" } else { "noshort" };
            let mut out = String::from("m,p_value\n");
            for &(m, p) in &curve.points {
                out.push_str(&format!("{m},{}\n", fmt_num(p)));
            }
            let name = format!("wrc_curve_{}_{}.csv", fmt_num(curve.cost), mode);
            write_file(&dir.join(name), out.as_bytes())?;
        }
    }

    if json_wanted {
        write_file(&dir.join("summary.json"), &to_json(&report.summary))?;
        let scaled: Vec<ScaledRow> = report.rows.iter().map(ScaledRow::from).collect();
        write_file(&dir.join("conditional_stats.json"), &to_json(&scaled))?;
        let wrc_rows: Vec<WrcRow> = report
            .wrc_table
            .iter()
            .map(|cell| WrcRow {
                short_selling: if cell.short_allowed { "yes" } else { "no" },
                cost: cell.cost,
                q: cell.q,
                p_value: cell.p_value,
                v_bar: cell.v_bar,
                best_rule: &cell.best_rule,
                significant_10pct: cell.p_value < 0.1,
            })
            .collect();
        write_file(&dir.join("wrc.json"), &to_json(&wrc_rows))?;
        write_file(&dir.join("curves.json"), &to_json(&report.curves))?;
    }

    write_file(&dir.join("provenance.json"), &to_json(&report.provenance))?;
    Ok(())
}
