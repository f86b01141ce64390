//! Daily price series ingestion and return computation.

use std::io::Read;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed row at line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },
    #[error("non-positive price at line {line}")]
    NonPositivePrice { line: usize },
    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },
    #[error("price series needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("cutoff {0} leaves fewer than 2 points")]
    CutoffTooLate(NaiveDate),
    #[error("need at least {needed} observations for summary statistics, got {got}")]
    TooFewObservations { needed: usize, got: usize },
}

/// Dated, strictly positive daily closing prices.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Build a series from parallel date/price vectors, sorting by date.
    pub fn new(mut rows: Vec<(NaiveDate, f64)>) -> Result<Self, DataError> {
        if rows.len() < 2 {
            return Err(DataError::TooShort(rows.len()));
        }
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DataError::DuplicateDate { date: w[0].0 });
            }
        }
        let (dates, prices) = rows.into_iter().unzip();
        Ok(Self { dates, prices })
    }

    /// Parse a `date,close` CSV stream.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| DataError::MalformedRow { line: 1, msg: e.to_string() })?
            .clone();
        let date_col = headers.iter().position(|h| h == "date").ok_or_else(|| {
            DataError::MalformedRow { line: 1, msg: "missing `date` column".into() }
        })?;
        let close_col = headers.iter().position(|h| h == "close").ok_or_else(|| {
            DataError::MalformedRow { line: 1, msg: "missing `close` column".into() }
        })?;

        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let line = i + 2; // header is line 1
            let record =
                record.map_err(|e| DataError::MalformedRow { line, msg: e.to_string() })?;
            let date_field = record
                .get(date_col)
                .ok_or_else(|| DataError::MalformedRow { line, msg: "missing date".into() })?;
            let close_field = record
                .get(close_col)
                .ok_or_else(|| DataError::MalformedRow { line, msg: "missing close".into() })?;
            let date = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|e| {
                DataError::MalformedRow { line, msg: format!("bad date `{date_field}`: {e}") }
            })?;
            if close_field.is_empty() {
                return Err(DataError::MalformedRow { line, msg: "blank close".into() });
            }
            let close: f64 = close_field.parse().map_err(|e| DataError::MalformedRow {
                line,
                msg: format!("bad close `{close_field}`: {e}"),
            })?;
            if !close.is_finite() || close <= 0.0 {
                return Err(DataError::NonPositivePrice { line });
            }
            rows.push((date, close));
        }
        Self::new(rows)
    }

    /// Drop all rows dated strictly before `cutoff`.
    pub fn truncate_before(&self, cutoff: NaiveDate) -> Result<Self, DataError> {
        let start = self.dates.partition_point(|d| *d < cutoff);
        if self.dates.len() - start < 2 {
            return Err(DataError::CutoffTooLate(cutoff));
        }
        Ok(Self {
            dates: self.dates[start..].to_vec(),
            prices: self.prices[start..].to_vec(),
        })
    }

    pub fn returns(&self) -> ReturnSeries {
        let n = self.prices.len() - 1;
        let mut log_returns = Vec::with_capacity(n);
        let mut relative_returns = Vec::with_capacity(n);
        for t in 1..self.prices.len() {
            log_returns.push((self.prices[t] / self.prices[t - 1]).ln());
            relative_returns.push((self.prices[t] - self.prices[t - 1]) / self.prices[t - 1]);
        }
        ReturnSeries {
            dates: self.dates[1..].to_vec(),
            log_returns,
            relative_returns,
        }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }
}

/// Which return representation an operation should consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Log,
    Relative,
}

/// Daily returns in both log and simple form, dated from the second price on.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    log_returns: Vec<f64>,
    relative_returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.log_returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_returns.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn log_returns(&self) -> &[f64] {
        &self.log_returns
    }

    pub fn relative_returns(&self) -> &[f64] {
        &self.relative_returns
    }

    pub fn values(&self, kind: ReturnKind) -> &[f64] {
        match kind {
            ReturnKind::Log => &self.log_returns,
            ReturnKind::Relative => &self.relative_returns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisConvention {
    /// Fourth standardized moment; 3 for a normal distribution.
    Raw,
    /// Raw minus 3.
    Excess,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub kurtosis_convention: KurtosisConvention,
    pub observations: usize,
}

/// Mean, sample std, adjusted Fisher-Pearson skewness, and kurtosis of a
/// return sample. Degenerate (constant) samples get NaN skew/kurtosis.
pub fn summary_stats(
    returns: &ReturnSeries,
    kind: ReturnKind,
    convention: KurtosisConvention,
) -> Result<SummaryStats, DataError> {
    let xs = returns.values(kind);
    if xs.len() < 4 {
        return Err(DataError::TooFewObservations { needed: 4, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let std = (m2 * n / (n - 1.0)).sqrt();
    let (skew, kurtosis) = if m2 > 0.0 {
        let g1 = m3 / m2.powf(1.5);
        let skew = g1 * (n * (n - 1.0)).sqrt() / (n - 2.0);
        let raw = m4 / (m2 * m2);
        let kurt = match convention {
            KurtosisConvention::Raw => raw,
            KurtosisConvention::Excess => raw - 3.0,
        };
        (skew, kurt)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(SummaryStats {
        mean,
        std,
        skew,
        kurtosis,
        kurtosis_convention: convention,
        observations: xs.len(),
    })
}
