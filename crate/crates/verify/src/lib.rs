//! Shared corpora and a small runner for the acceptance checks.

use availsearch_core::extensions::hetero::{het_peak, HeterogeneityConfig};
use availsearch_core::extensions::noisy::NoisyTech;
use availsearch_core::pricing::MarketConfig;
use std::time::{Duration, Instant};

/// Failures collected while a criterion runs.
#[derive(Debug, Default)]
pub struct Findings {
    failures: Vec<String>,
    checks: usize,
}

impl Findings {
    pub fn ensure(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn fail(&mut self, what: String) {
        self.checks += 1;
        self.failures.push(what);
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    pub fn checks(&self) -> usize {
        self.checks
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget: Option<Duration>,
    pub run: fn(&mut Findings),
}

/// Runs each criterion, prints one line per criterion followed by any
/// failure details, and returns whether all passed.
pub fn run_all(criteria: &[Criterion]) -> bool {
    let mut all_ok = true;
    for c in criteria {
        let mut findings = Findings::default();
        let start = Instant::now();
        (c.run)(&mut findings);
        let elapsed = start.elapsed();
        if let Some(budget) = c.budget {
            findings.ensure(elapsed <= budget, || {
                format!("runtime {elapsed:.2?} exceeds {budget:?}")
            });
        }
        let ok = findings.failures().is_empty();
        all_ok &= ok;
        println!(
            "{} criterion {}: {} ({} checks, {:.2?})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            findings.checks(),
            elapsed
        );
        for f in findings.failures().iter().take(8) {
            println!("    {f}");
        }
        if findings.failures().len() > 8 {
            println!("    ... {} more", findings.failures().len() - 8);
        }
    }
    all_ok
}

pub fn market(theta: &[f64], c: f64) -> MarketConfig {
    MarketConfig::new(theta.len() - 1, 1.0, c, theta.to_vec()).expect("corpus config is valid")
}

/// Availability distributions for the structural checks, N from 3 to 8.
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

/// Each technology below `N` reveals its own count, or one more with
/// probability `spill`.
pub fn leaky(firms: usize, spill: f64) -> NoisyTech {
    NoisyTech::new(
        (1..=firms)
            .map(|l| {
                (1..=firms)
                    .map(|k| match (l == firms, k) {
                        (true, k) if k == l => 1.0,
                        (false, k) if k == l => 1.0 - spill,
                        (false, k) if k == l + 1 => spill,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect(),
    )
}

pub fn tech_corpus() -> Vec<(Vec<f64>, NoisyTech)> {
    vec![
        (vec![0.0, 0.0, 0.9, 0.1], leaky(3, 0.2)),
        (vec![0.0, 0.1, 0.6, 0.3], leaky(3, 0.4)),
        (vec![0.0, 0.0, 0.5, 0.3, 0.2], leaky(4, 0.1)),
        (vec![0.0, 0.0, 0.0, 0.7, 0.3], leaky(4, 0.3)),
        (vec![0.0, 0.05, 0.0, 0.5, 0.25, 0.2], leaky(5, 0.25)),
    ]
}

/// Ten heterogeneity configs, each with the cost set to half the peak gain.
pub fn het_corpus() -> Vec<HeterogeneityConfig> {
    let raw: [(&[f64], f64); 10] = [
        (&[0.0, 0.0, 0.8, 0.2], 0.1),
        (&[0.0, 0.1, 0.7, 0.2], 0.2),
        (&[0.0, 0.0, 0.5, 0.5], 0.05),
        (&[0.0, 0.2, 0.4, 0.4], 0.3),
        (&[0.0, 0.0, 0.6, 0.2, 0.2], 0.1),
        (&[0.0, 0.1, 0.5, 0.2, 0.2], 0.5),
        (&[0.0, 0.0, 0.4, 0.3, 0.3, 0.0], 0.2),
        (&[0.05, 0.05, 0.5, 0.2, 0.1, 0.1], 0.4),
        (&[0.0, 0.0, 0.3, 0.3, 0.2, 0.1, 0.1], 0.6),
        (&[0.0, 0.1, 0.6, 0.1, 0.1, 0.05, 0.05], 0.15),
    ];
    raw.iter()
        .map(|(theta, lambda)| {
            let probe = HeterogeneityConfig::new(market(theta, 0.01), *lambda)
                .expect("corpus config is valid");
            let (_, peak) = het_peak(&probe).expect("peak exists");
            let m = probe
                .market()
                .with_search_cost(0.5 * peak)
                .expect("positive cost");
            probe.with_market(m).expect("same lambda")
        })
        .collect()
}
