//! Backtesting of moving-average and trading-range-break rules on daily
//! price series, with conditional-return t-statistics and White's Reality
//! Check under stationary-bootstrap resampling and transaction costs.

pub mod conditional_stats;
pub mod market_data;
pub mod reality_check;
pub mod report;
pub mod rule_engine;
