//! Heterogeneous search costs: a share `lambda` of buyers observes every
//! price for free, the rest search `N - 1` firms with probability `q` and all
//! `N` otherwise.

use crate::equilibrium::WEIGHT_CLAMP;
use crate::error::{ModelError, Result};
use crate::optimize::{bisect, unit_slope};
use crate::pricing::MarketConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneityConfig {
    market: MarketConfig,
    costless_share: f64,
}

impl HeterogeneityConfig {
    pub fn new(market: MarketConfig, costless_share: f64) -> Result<Self> {
        if !(costless_share > 0.0 && costless_share < 1.0) {
            return Err(ModelError::Validation("lambda"));
        }
        if market.theta().get(2) <= 0.0 {
            return Err(ModelError::Validation("theta-duopoly"));
        }
        Ok(Self {
            market,
            costless_share,
        })
    }

    pub fn market(&self) -> &MarketConfig {
        &self.market
    }

    pub fn costless_share(&self) -> f64 {
        self.costless_share
    }

    pub fn with_market(&self, market: MarketConfig) -> Result<Self> {
        Self::new(market, self.costless_share)
    }
}

/// Locked-in buyers per seller relative to price-comparing buyers in a duopoly.
pub fn mu(weight: f64, costless_share: f64, firms: usize) -> f64 {
    let locked = weight * (1.0 - costless_share);
    locked / (firms as f64 - 2.0 * locked)
}

/// Stationarity function whose root is the maximiser of the price spread in
/// `mu`.
pub fn stationarity(ratio: f64) -> f64 {
    (1.0 + 1.0 / ratio).ln() - (3.0 + 4.0 * ratio) / ((1.0 + ratio) * (1.0 + 4.0 * ratio))
}

/// Duopoly price law with survival `mu (v / p - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuopolyLaw {
    ratio: f64,
    valuation: f64,
}

impl DuopolyLaw {
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn floor(&self) -> f64 {
        self.valuation * self.ratio / (1.0 + self.ratio)
    }

    pub fn survival(&self, price: f64) -> Result<f64> {
        if price < self.floor() * (1.0 - 1e-15) || price > self.valuation {
            return Err(ModelError::OutOfSupport {
                price,
                floor: self.floor(),
                ceiling: self.valuation,
            });
        }
        Ok((self.ratio * (self.valuation / price - 1.0)).clamp(0.0, 1.0))
    }

    pub fn price_at(&self, x: f64) -> f64 {
        self.valuation * self.ratio / (x + self.ratio)
    }

    pub fn mean_price(&self) -> f64 {
        let m = self.ratio;
        self.valuation * m * (1.0 + 1.0 / m).ln()
    }

    pub fn mean_min_price(&self) -> f64 {
        let m = self.ratio;
        2.0 * self.valuation * m * (1.0 - m * (1.0 + 1.0 / m).ln())
    }

    /// `E[p] - E[min(p1, p2)]` in closed form.
    pub fn spread(&self) -> f64 {
        let m = self.ratio;
        self.valuation * m * ((1.0 + 2.0 * m) * (1.0 + 1.0 / m).ln() - 2.0)
    }
}

pub fn duopoly_price_law(
    weight: f64,
    costless_share: f64,
    firms: usize,
    valuation: f64,
) -> Result<DuopolyLaw> {
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(ModelError::Degenerate("no locked-in buyers"));
    }
    Ok(DuopolyLaw {
        ratio: mu(weight, costless_share, firms),
        valuation,
    })
}

/// Gain for a costly buyer from searching all `N` firms instead of `N - 1`.
pub fn het_benefit(config: &HeterogeneityConfig, weight: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(ModelError::Domain(format!(
            "weight {weight} outside [0, 1]"
        )));
    }
    if weight == 0.0 {
        return Ok(0.0);
    }
    let m = config.market();
    let law = duopoly_price_law(weight, config.costless_share, m.firms(), m.valuation())?;
    Ok(m.theta().get(2) * 2.0 / m.firms() as f64 * law.spread())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HetRoot {
    pub weight: f64,
    pub slope: f64,
    pub stable: bool,
}

/// Maximiser of `het_benefit` over `(0, 1]` and the maximum. The spread
/// has slope `(1 + 4 mu) stationarity(mu)` in `mu`, and `mu` rises with the
/// weight, so the peak is where `stationarity` changes sign, or at 1 when it
/// stays positive.
pub fn het_peak(config: &HeterogeneityConfig) -> Result<(f64, f64)> {
    let firms = config.market().firms();
    let m_at = |q: f64| Ok(stationarity(mu(q, config.costless_share, firms)));
    let peak = if m_at(1.0)? >= 0.0 {
        1.0
    } else {
        bisect(m_at, WEIGHT_CLAMP, 1.0, 1.0)?
    };
    Ok((peak, het_benefit(config, peak)?))
}

/// Weights on `N - 1` searches where the gain from the last search equals `c`.
pub fn het_solve(config: &HeterogeneityConfig) -> Result<Vec<HetRoot>> {
    let c = config.market().search_cost();
    let f = |q: f64| het_benefit(config, q);
    let (lo, hi) = (WEIGHT_CLAMP, 1.0 - WEIGHT_CLAMP);
    let (peak, peak_value) = het_peak(config)?;
    if peak_value < c {
        return Err(ModelError::CostTooLarge {
            threshold: peak_value,
        });
    }
    let g = |q: f64| Ok(f(q)? - c);
    let mut roots = Vec::new();
    if f(lo)? < c {
        roots.push(bisect(g, lo, peak, -1.0)?);
    }
    if peak < hi && f(hi)? < c {
        roots.push(bisect(g, peak, hi, 1.0)?);
    }
    roots
        .into_iter()
        .map(|weight| {
            let slope = unit_slope(f, weight, 1e-6)?;
            Ok(HetRoot {
                weight,
                slope,
                stable: slope > 0.0,
            })
        })
        .collect()
}

/// Outcome for buyers with positive search cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HetOutcome {
    pub weight: f64,
    pub ratio: f64,
    pub expected_price: f64,
    pub purchase_probability: f64,
    pub average_virtual_price: f64,
    pub search_expenditure: f64,
    pub surplus: f64,
}

pub fn het_report(config: &HeterogeneityConfig, weight: f64) -> Result<HetOutcome> {
    let m = config.market();
    let firms = m.firms() as f64;
    let v = m.valuation();
    let law = duopoly_price_law(weight, config.costless_share, m.firms(), v)?;
    let theta = m.theta();
    let found_alone = weight * (firms - 1.0) / firms + (1.0 - weight);
    let duopoly_spend = weight
        * (2.0 / firms * law.mean_price() + (firms - 2.0) / firms * law.mean_min_price())
        + (1.0 - weight) * law.mean_min_price();
    let oligopoly_mass: f64 = (2..=m.firms()).map(|n| theta.get(n)).sum();
    let spending = theta.get(1) * v * found_alone + theta.get(2) * duopoly_spend;
    let purchase = theta.get(1) * found_alone + oligopoly_mass;
    let average_virtual_price = spending + v * (1.0 - purchase);
    let search_expenditure =
        (weight * (firms - 2.0) + (1.0 - weight) * (firms - 1.0)) * m.search_cost();
    Ok(HetOutcome {
        weight,
        ratio: law.ratio(),
        expected_price: spending / purchase,
        purchase_probability: purchase,
        average_virtual_price,
        search_expenditure,
        surplus: v - average_virtual_price - search_expenditure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HetRow {
    pub shift: f64,
    pub theta: Vec<f64>,
    pub outcome: Option<HetOutcome>,
}

/// Moves mass from `theta_from` to `theta_to`, reporting the stable solution.
pub fn het_sweep_theta(
    config: &HeterogeneityConfig,
    to: usize,
    from: usize,
    shifts: &[f64],
) -> Result<Vec<HetRow>> {
    if to == from {
        return Err(ModelError::Domain(
            "shift source and target coincide".into(),
        ));
    }
    shifts
        .iter()
        .map(|&shift| {
            let point = config.with_market(config.market().shifted(from, to, shift)?)?;
            let outcome = match het_solve(&point) {
                Ok(roots) => match roots.iter().find(|r| r.stable) {
                    Some(root) => Some(het_report(&point, root.weight)?),
                    None => None,
                },
                Err(ModelError::CostTooLarge { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(HetRow {
                shift,
                theta: point.market().theta().weights().to_vec(),
                outcome,
            })
        })
        .collect()
}
