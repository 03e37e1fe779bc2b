//! Welfare and price metrics, and comparative-statics sweeps.

use crate::equilibrium::{enumerate, market_terms, Equilibrium, EquilibriumKind};
use crate::error::{ModelError, Result};
use crate::hypergeom;
use crate::pricing::MarketConfig;
use crate::quadrature::rule64;

const BOUNDARY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeReport {
    /// Expected price paid conditional on buying.
    pub expected_price: f64,
    pub purchase_probability: f64,
    pub average_virtual_price: f64,
    pub expected_searches: f64,
    /// Paid searches times the search cost; the first search is free.
    pub search_expenditure: f64,
    pub surplus: f64,
}

pub fn report(config: &MarketConfig, eq: &Equilibrium) -> Result<OutcomeReport> {
    let v = config.valuation();
    let mix = eq.mix();
    let counts = mix.count_weights(config.firms());
    let rule = rule64();
    let (mut spending, mut purchase) = (0.0, 0.0);
    for (j, &w) in counts.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (n, &theta) in config.theta().weights().iter().enumerate() {
            if theta == 0.0 {
                continue;
            }
            let terms = market_terms(config, eq.laws.get(n), n, j, rule)?;
            spending += w * theta * terms.spending;
            purchase += w * theta * terms.purchase;
        }
    }
    let expected_searches = mix.expected_searches();
    let search_expenditure = (expected_searches - 1.0) * config.search_cost();
    let average_virtual_price = spending + v * (1.0 - purchase);
    Ok(OutcomeReport {
        expected_price: if purchase > 0.0 {
            spending / purchase
        } else {
            0.0
        },
        purchase_probability: purchase,
        average_virtual_price,
        expected_searches,
        search_expenditure,
        surplus: v - average_virtual_price - search_expenditure,
    })
}

/// Share of buyers observing exactly one price among those observing any,
/// `pmf(1) / (1 - pmf(0))`.
pub fn conditional_price_fraction(firms: usize, k: usize, n: usize) -> Result<f64> {
    if n == 0 || k < 2 {
        return Err(ModelError::Domain(format!(
            "need n >= 1 and k >= 2, got n = {n}, k = {k}"
        )));
    }
    let frame = hypergeom::SampleFrame::new(firms, n, k)?;
    let single = hypergeom::pmf(frame, 1)?;
    if single == 0.0 {
        return Ok(0.0);
    }
    Ok(single / (1.0 - hypergeom::pmf(frame, 0)?))
}

/// An equilibrium together with its outcome metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub equilibrium: Equilibrium,
    pub report: OutcomeReport,
}

impl BranchPoint {
    pub fn weight(&self) -> f64 {
        self.equilibrium.mix().weight()
    }

    pub fn k(&self) -> usize {
        self.equilibrium.mix().lower()
    }
}

/// Stable mixed and stable pure equilibria at a config. When several
/// qualify, the one with the largest search count is kept.
fn stable_branches(config: &MarketConfig) -> Result<(Option<BranchPoint>, Option<BranchPoint>)> {
    let eqs = enumerate(config)?;
    let pick = |want_mixed: bool| -> Result<Option<BranchPoint>> {
        let chosen = eqs
            .iter()
            .filter(|e| e.stability.is_stable())
            .filter(|e| match e.kind {
                EquilibriumKind::MixedSearch { .. } => want_mixed,
                EquilibriumKind::PureSearch { .. } => !want_mixed,
                EquilibriumKind::Diamond => false,
            })
            .max_by_key(|e| e.mix().lower());
        chosen
            .map(|e| {
                Ok(BranchPoint {
                    report: report(config, e)?,
                    equilibrium: e.clone(),
                })
            })
            .transpose()
    };
    Ok((pick(true)?, pick(false)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRow {
    pub shift: f64,
    pub theta: Vec<f64>,
    pub mixed: Option<BranchPoint>,
    pub pure: Option<BranchPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Mixed,
    Pure,
}

/// Shift amount at which a branch appears or disappears.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceBoundary {
    pub branch: Branch,
    pub shift: f64,
    pub appears: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSweep {
    pub rows: Vec<ThetaRow>,
    pub boundaries: Vec<ExistenceBoundary>,
}

fn branch_exists(config: &MarketConfig, branch: Branch) -> Result<bool> {
    let (mixed, pure) = stable_branches(config)?;
    Ok(match branch {
        Branch::Mixed => mixed.is_some(),
        Branch::Pure => pure.is_some(),
    })
}

fn locate_boundary(
    template: &MarketConfig,
    from: usize,
    to: usize,
    branch: Branch,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let at_lo = branch_exists(&template.shifted(from, to, lo)?, branch)?;
    while hi - lo > BOUNDARY_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if branch_exists(&template.shifted(from, to, mid)?, branch)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Moves probability mass from `theta_from` to `theta_to` by each amount in
/// `shifts` and records both stable branches.
pub fn sweep_theta(
    template: &MarketConfig,
    to: usize,
    from: usize,
    shifts: &[f64],
) -> Result<ThetaSweep> {
    if to <= from {
        return Err(ModelError::Domain(format!(
            "target index {to} must exceed source {from}"
        )));
    }
    let mut rows = Vec::with_capacity(shifts.len());
    for &shift in shifts {
        let config = template.shifted(from, to, shift)?;
        let (mixed, pure) = stable_branches(&config)?;
        rows.push(ThetaRow {
            shift,
            theta: config.theta().weights().to_vec(),
            mixed,
            pure,
        });
    }
    let mut boundaries = Vec::new();
    for pair in rows.windows(2) {
        for branch in [Branch::Mixed, Branch::Pure] {
            let has = |r: &ThetaRow| match branch {
                Branch::Mixed => r.mixed.is_some(),
                Branch::Pure => r.pure.is_some(),
            };
            if has(&pair[0]) != has(&pair[1]) {
                let shift =
                    locate_boundary(template, from, to, branch, pair[0].shift, pair[1].shift)?;
                boundaries.push(ExistenceBoundary {
                    branch,
                    shift,
                    appears: has(&pair[1]),
                });
            }
        }
    }
    Ok(ThetaSweep { rows, boundaries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub cost: f64,
    pub points: Vec<BranchPoint>,
}

/// Stable equilibria (Diamond included) with reports along a cost grid.
pub fn sweep_cost(template: &MarketConfig, costs: &[f64]) -> Result<Vec<CostRow>> {
    if costs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModelError::Domain(
            "cost grid must be strictly ascending".into(),
        ));
    }
    costs
        .iter()
        .map(|&cost| {
            let config = template.with_search_cost(cost)?;
            let points = enumerate(&config)?
                .into_iter()
                .filter(|e| e.stability.is_stable())
                .map(|e| {
                    Ok(BranchPoint {
                        report: report(&config, &e)?,
                        equilibrium: e,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CostRow { cost, points })
        })
        .collect()
}
