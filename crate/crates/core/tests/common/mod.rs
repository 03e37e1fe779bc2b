#![allow(dead_code)]

use availsearch_core::pricing::MarketConfig;

pub fn market(theta: &[f64], c: f64) -> MarketConfig {
    MarketConfig::new(theta.len() - 1, 1.0, c, theta.to_vec()).expect("corpus config is valid")
}

/// Availability distributions used across the structural tests.
pub fn corpus() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 0.9, 0.1],
        vec![0.0, 0.05, 0.9, 0.05],
        vec![0.0, 0.0, 0.5, 0.5],
        vec![0.1, 0.1, 0.4, 0.4],
        vec![0.0, 0.0, 0.3, 0.3, 0.4],
        vec![0.0, 0.1, 0.0, 0.5, 0.4],
        vec![0.0, 0.0, 0.2, 0.2, 0.3, 0.3],
        vec![0.05, 0.05, 0.0, 0.3, 0.3, 0.3],
        vec![0.0, 0.0, 0.5, 0.1, 0.1, 0.1, 0.2],
        vec![0.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.2],
    ]
}
