//! Shared fixtures for the integration suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Seeded geometric random walk of daily prices.
pub fn random_walk(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut prices = vec![100.0f64];
    for _ in 1..len {
        let last = *prices.last().unwrap();
        let step: f64 = rng.gen_range(-0.02..0.02);
        prices.push(last * step.exp());
    }
    prices
}

/// `date,close` CSV text for a price path, one row per calendar day.
pub fn prices_to_csv(prices: &[f64]) -> String {
    let start = chrono::NaiveDate::from_ymd_opt(1995, 1, 2).unwrap();
    let mut out = String::from("date,close\n");
    for (i, p) in prices.iter().enumerate() {
        let date = start + chrono::Days::new(i as u64);
        out.push_str(&format!("{date},{p}\n"));
    }
    out
}
