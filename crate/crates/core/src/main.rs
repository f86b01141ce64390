use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::Parser;

use rulecheck::report::{self, Format, RunConfig, RunError, ShortSelling};

/// Evaluate moving-average and trading-range-break trading rules on a daily
/// price series: conditional-return t-statistics plus White's Reality Check
/// with stationary-bootstrap resampling and transaction costs.
#[derive(Parser, Debug)]
#[command(name = "rulecheck", version)]
struct Cli {
    /// Flat key=value config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Input CSV with `date,close` columns
    #[arg(long)]
    input: Option<PathBuf>,

    /// Discard rows before this date (ISO-8601)
    #[arg(long)]
    cutoff: Option<NaiveDate>,

    /// Comma-separated one-way transaction cost rates
    #[arg(long, value_delimiter = ',')]
    cost: Option<Vec<f64>>,

    /// Comma-separated bootstrap smoothing parameters in (0, 1]
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,

    /// Bootstrap replications
    #[arg(long)]
    replications: Option<usize>,

    /// First evaluation day index
    #[arg(long)]
    warmup: Option<usize>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Constant daily risk-free rate for Sharpe ratios
    #[arg(long = "risk-free")]
    risk_free: Option<f64>,

    /// Short-selling mode: no, yes, or both
    #[arg(long = "short-selling")]
    short_selling: Option<ShortSellingArg>,

    /// `all` or a comma-separated rule list like `VMA(1,20,0),TRB(50,0.01,10)`
    #[arg(long)]
    rules: Option<String>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output formats: csv, json
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

#[derive(Debug, Clone)]
struct ShortSellingArg(ShortSelling);

impl std::str::FromStr for ShortSellingArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ShortSellingArg)
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>, RunError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| RunError::Config(format!("bad `{key}` value `{s}`: {e}")))
        })
        .collect()
}

fn build_config(cli: Cli) -> Result<RunConfig, RunError> {
    let file: BTreeMap<String, String> = match &cli.config {
        Some(path) => report::parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut config = RunConfig::default();

    if let Some(v) = file.get("input") {
        config.input_path = PathBuf::from(v);
    }
    if let Some(v) = file.get("cutoff") {
        let date = NaiveDate::parse_from_str(v, "%Y-%m-%d")
            .map_err(|e| RunError::Config(format!("bad cutoff `{v}`: {e}")))?;
        config.cutoff = Some(date);
    }
    if let Some(v) = file.get("cost") {
        config.costs = parse_list(v, "cost")?;
    }
    if let Some(v) = file.get("q") {
        config.q_values = parse_list(v, "q")?;
    }
    if let Some(v) = file.get("replications") {
        config.replications = v
            .parse()
            .map_err(|e| RunError::Config(format!("bad replications `{v}`: {e}")))?;
    }
    if let Some(v) = file.get("warmup") {
        config.eval_start = v
            .parse()
            .map_err(|e| RunError::Config(format!("bad warmup `{v}`: {e}")))?;
    }
    if let Some(v) = file.get("seed") {
        config.seed = v.parse().map_err(|e| RunError::Config(format!("bad seed `{v}`: {e}")))?;
    }
    if let Some(v) = file.get("risk-free") {
        config.risk_free = v
            .parse()
            .map_err(|e| RunError::Config(format!("bad risk-free `{v}`: {e}")))?;
    }
    if let Some(v) = file.get("short-selling") {
        config.short_selling = v
            .parse()
            .map_err(|e| RunError::Config(format!("bad short-selling `{v}`: {e}")))?;
    }
    if let Some(v) = file.get("rules") {
        config.rule_selection = rule_selection_from(v);
    }
    if let Some(v) = file.get("out") {
        config.output_dir = PathBuf::from(v);
    }
    if let Some(v) = file.get("format") {
        config.formats = parse_list(v, "format")?;
    }

    // flags override file values
    if let Some(v) = cli.input {
        config.input_path = v;
    }
    if let Some(v) = cli.cutoff {
        config.cutoff = Some(v);
    }
    if let Some(v) = cli.cost {
        config.costs = v;
    }
    if let Some(v) = cli.q {
        config.q_values = v;
    }
    if let Some(v) = cli.replications {
        config.replications = v;
    }
    if let Some(v) = cli.warmup {
        config.eval_start = v;
    }
    if let Some(v) = cli.seed {
        config.seed = v;
    }
    if let Some(v) = cli.risk_free {
        config.risk_free = v;
    }
    if let Some(v) = cli.short_selling {
        config.short_selling = v.0;
    }
    if let Some(v) = cli.rules {
        config.rule_selection = rule_selection_from(&v);
    }
    if let Some(v) = cli.out {
        config.output_dir = v;
    }
    if let Some(v) = cli.format {
        config.formats = v;
    }
    Ok(config)
}

/// Splits a rule list on commas outside parentheses, so labels like
/// `VMA(1,20,0)` stay intact.
fn rule_selection_from(raw: &str) -> Option<Vec<String>> {
    let mut labels = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in raw.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            ',' if depth == 0 => {
                if !current.trim().is_empty() {
                    labels.push(current.trim().to_string());
                }
                current.clear();
            }
            _ => current.push(ch),
        }
    }
    if !current.trim().is_empty() {
        labels.push(current.trim().to_string());
    }
    if labels.len() == 1 && labels[0].eq_ignore_ascii_case("all") {
        None
    } else {
        Some(labels)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|config| report::run(&config));
    match result {
        Ok(report) => {
            for cell in &report.wrc_table {
                eprintln!(
                    "wrc short={} cost={} q={} p={}",
                    if cell.short_allowed { "yes" } else { "no" },
                    cell.cost,
                    cell.q,
                    cell.p_value
                );
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
