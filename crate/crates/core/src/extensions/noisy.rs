//! Noisy search: a technology `l` reveals `k >= l` firms with probability
//! `delta[l][k]` and costs `(l - 1) c`.

use crate::equilibrium::{market_terms, WEIGHT_CLAMP};
use crate::error::{ModelError, Result};
use crate::hypergeom;
use crate::optimize::{bisect, golden_max, unit_slope};
use crate::poly::Poly;
use crate::pricing::{DispersedLaw, MarketConfig, PriceLaw};
use crate::quadrature::rule64;

const ROW_TOLERANCE: f64 = 1e-12;
const CONVEXITY_MARGIN: f64 = 1e-12;

/// Square matrix of reveal probabilities, rows and columns indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTech {
    rows: Vec<Vec<f64>>,
}

impl NoisyTech {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    /// Technology `l` reveals exactly `l` firms.
    pub fn identity(firms: usize) -> Self {
        Self::new(
            (0..firms)
                .map(|l| (0..firms).map(|k| if k == l { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `delta[l][k]`, both indices starting at 1.
    pub fn reveal(&self, l: usize, k: usize) -> f64 {
        self.rows[l - 1][k - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TechViolation {
    Shape { expected: usize },
    Negative { l: usize, k: usize },
    RowSum { l: usize, sum: f64 },
    BelowDiagonal { l: usize, k: usize },
    Dominance { l: usize, m: usize },
    Convexity { l: usize, n: usize, x: f64 },
}

/// Survival levels where the convexity condition is checked. Both endpoints
/// are excluded: at `x = 1` every generating function equals one, so the
/// condition degenerates to `0 > 0` for any technology.
pub fn convexity_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}

pub fn validate_tech(tech: &NoisyTech, firms: usize) -> Vec<TechViolation> {
    if tech.size() != firms || tech.rows.iter().any(|r| r.len() != firms) {
        return vec![TechViolation::Shape { expected: firms }];
    }
    let mut out = Vec::new();
    for l in 1..=firms {
        for k in 1..=firms {
            let d = tech.reveal(l, k);
            if d < 0.0 {
                out.push(TechViolation::Negative { l, k });
            }
            if k < l && d != 0.0 {
                out.push(TechViolation::BelowDiagonal { l, k });
            }
        }
        let sum: f64 = tech.rows[l - 1].iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            out.push(TechViolation::RowSum { l, sum });
        }
    }
    for l in 1..firms {
        let (mut lo, mut hi) = (0.0, 0.0);
        for m in 1..=firms {
            lo += tech.reveal(l, m);
            hi += tech.reveal(l + 1, m);
            if m >= l && lo < hi - ROW_TOLERANCE {
                out.push(TechViolation::Dominance { l, m });
            }
        }
    }
    for l in 2..firms {
        for n in 2..=firms {
            let combo = (1..=firms).fold(Poly::default(), |acc, k| {
                let w = tech.reveal(l - 1, k) + tech.reveal(l + 1, k) - 2.0 * tech.reveal(l, k);
                let frame = hypergeom::SampleFrame::new(firms, n, k).expect("validated size");
                acc.combine(1.0, &hypergeom::generating_poly(frame), w)
            });
            for x in convexity_grid() {
                if combo.eval(x) <= CONVEXITY_MARGIN {
                    out.push(TechViolation::Convexity { l, n, x });
                }
            }
        }
    }
    out
}

fn check_inputs(config: &MarketConfig, tech: &NoisyTech) -> Result<(usize, usize)> {
    if tech.size() != config.firms() {
        return Err(ModelError::Domain(format!(
            "technology has {} rows, expected {}",
            tech.size(),
            config.firms()
        )));
    }
    let n_min = config.require_min_oligopoly()?;
    Ok((n_min, config.firms() - n_min + 1))
}

/// Density combination `sum_k w_k alpha'_{n k}(x)` for reveal weights `w`.
fn reveal_density(config: &MarketConfig, n: usize, weights: impl Fn(usize) -> f64) -> Poly {
    (1..=config.firms()).fold(Poly::default(), |acc, k| {
        let d = hypergeom::generating_poly(config.frame(n, k)).derivative();
        acc.combine(1.0, &d, weights(k))
    })
}

/// Price law in the smallest oligopoly when technology `l` is chosen with
/// probability `weight` and `l + 1` otherwise.
pub fn noisy_price_law(
    config: &MarketConfig,
    tech: &NoisyTech,
    weight: f64,
) -> Result<DispersedLaw> {
    let (n_min, l) = check_inputs(config, tech)?;
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(ModelError::Domain(format!(
            "technology weight {weight} outside (0, 1]"
        )));
    }
    let sale = reveal_density(config, n_min, |k| {
        weight * tech.reveal(l, k) + (1.0 - weight) * tech.reveal(l + 1, k)
    });
    DispersedLaw::new(n_min, config.valuation(), sale)
}

/// Expected virtual price reduction from using technology `l + 1` instead of `l`.
pub fn noisy_benefit(
    config: &MarketConfig,
    tech: &NoisyTech,
    l: usize,
    weight: f64,
) -> Result<f64> {
    let (n_min, top) = check_inputs(config, tech)?;
    if l != top {
        return Err(ModelError::Domain(format!(
            "technology index must be {top}, got {l}"
        )));
    }
    if weight == 0.0 {
        return Ok(0.0);
    }
    let law = noisy_price_law(config, tech, weight)?;
    let gap = reveal_density(config, n_min, |k| tech.reveal(l, k) - tech.reveal(l + 1, k));
    Ok(config.theta().get(n_min) * law.integrate_against(rule64(), |x| gap.eval(x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyRoot {
    pub weight: f64,
    pub slope: f64,
    pub stable: bool,
}

/// Positive-slope solution of `noisy_benefit = c`.
pub fn noisy_solve(config: &MarketConfig, tech: &NoisyTech) -> Result<NoisyRoot> {
    let (_, l) = check_inputs(config, tech)?;
    let c = config.search_cost();
    let f = |q: f64| noisy_benefit(config, tech, l, q);
    let (peak, peak_value) = golden_max(f, WEIGHT_CLAMP, 1.0 - WEIGHT_CLAMP)?;
    if peak_value < c {
        return Err(ModelError::CostTooLarge {
            threshold: peak_value,
        });
    }
    if f(WEIGHT_CLAMP)? >= c {
        return Err(ModelError::InvalidEquilibrium(
            "search cost below the resolvable range".into(),
        ));
    }
    let weight = bisect(|q| Ok(f(q)? - c), WEIGHT_CLAMP, peak, -1.0)?;
    let slope = unit_slope(f, weight, 1e-6)?;
    Ok(NoisyRoot {
        weight,
        slope,
        stable: slope > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyOutcome {
    pub weight: f64,
    pub expected_price: f64,
    pub purchase_probability: f64,
    pub average_virtual_price: f64,
    pub expected_technology_cost: f64,
    pub surplus: f64,
}

pub fn noisy_report(config: &MarketConfig, tech: &NoisyTech, weight: f64) -> Result<NoisyOutcome> {
    let (n_min, l) = check_inputs(config, tech)?;
    let law = PriceLaw::Dispersed(noisy_price_law(config, tech, weight)?);
    let rule = rule64();
    let (mut spending, mut purchase) = (0.0, 0.0);
    for (tech_index, tech_weight) in [(l, weight), (l + 1, 1.0 - weight)] {
        if tech_weight == 0.0 {
            continue;
        }
        for k in 1..=config.firms() {
            let w = tech_weight * tech.reveal(tech_index, k);
            if w == 0.0 {
                continue;
            }
            for (n, &theta) in config.theta().weights().iter().enumerate() {
                if theta == 0.0 {
                    continue;
                }
                let market_law = match n {
                    1 => &PriceLaw::MonopolyAtom,
                    _ if n == n_min => &law,
                    _ => &PriceLaw::MarginalCostAtom,
                };
                let t = market_terms(config, market_law, n, k, rule)?;
                spending += w * theta * t.spending;
                purchase += w * theta * t.purchase;
            }
        }
    }
    let v = config.valuation();
    let average_virtual_price = spending + v * (1.0 - purchase);
    let expected_technology_cost =
        (weight * (l - 1) as f64 + (1.0 - weight) * l as f64) * config.search_cost();
    Ok(NoisyOutcome {
        weight,
        expected_price: if purchase > 0.0 {
            spending / purchase
        } else {
            0.0
        },
        purchase_probability: purchase,
        average_virtual_price,
        expected_technology_cost,
        surplus: v - average_virtual_price - expected_technology_cost,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyRow {
    pub shift: f64,
    pub theta: Vec<f64>,
    pub outcome: Option<NoisyOutcome>,
}

/// Moves mass from `theta_from` to `theta_to` and solves at each point;
/// `outcome` is empty where no positive-slope solution exists.
pub fn noisy_sweep_theta(
    template: &MarketConfig,
    tech: &NoisyTech,
    to: usize,
    from: usize,
    shifts: &[f64],
) -> Result<Vec<NoisyRow>> {
    if to <= from {
        return Err(ModelError::Domain(format!(
            "target index {to} must exceed source {from}"
        )));
    }
    shifts
        .iter()
        .map(|&shift| {
            let config = template.shifted(from, to, shift)?;
            let outcome = match noisy_solve(&config, tech) {
                Ok(root) => Some(noisy_report(&config, tech, root.weight)?),
                Err(ModelError::CostTooLarge { .. }) | Err(ModelError::InvalidEquilibrium(_)) => {
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(NoisyRow {
                shift,
                theta: config.theta().weights().to_vec(),
                outcome,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::benefit;
    use approx::assert_abs_diff_eq;

    fn cfg(theta: &[f64], c: f64) -> MarketConfig {
        MarketConfig::new(theta.len() - 1, 1.0, c, theta.to_vec()).unwrap()
    }

    fn leaky(firms: usize, spill: f64) -> NoisyTech {
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

    #[test]
    fn identity_tech_passes_on_interior_grid() {
        for firms in 3..=8 {
            assert!(
                validate_tech(&NoisyTech::identity(firms), firms).is_empty(),
                "N={firms}"
            );
        }
    }

    #[test]
    fn bad_row_sum_flagged() {
        let mut rows = NoisyTech::identity(3).rows().to_vec();
        rows[1][1] = 0.9;
        let v = validate_tech(&NoisyTech::new(rows), 3);
        assert!(v
            .iter()
            .any(|e| matches!(e, TechViolation::RowSum { l: 2, .. })));
    }

    #[test]
    fn below_diagonal_and_shape_flagged() {
        let mut rows = NoisyTech::identity(3).rows().to_vec();
        rows[2] = vec![0.5, 0.0, 0.5];
        let v = validate_tech(&NoisyTech::new(rows), 3);
        assert!(v
            .iter()
            .any(|e| matches!(e, TechViolation::BelowDiagonal { l: 3, k: 1 })));
        assert_eq!(
            validate_tech(&NoisyTech::identity(3), 4),
            vec![TechViolation::Shape { expected: 4 }]
        );
    }

    #[test]
    fn uniform_upper_tail_checked() {
        let firms = 4;
        let rows = (1..=firms)
            .map(|l| {
                (1..=firms)
                    .map(|k| {
                        if k >= l {
                            1.0 / (firms - l + 1) as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let v = validate_tech(&NoisyTech::new(rows), firms);
        assert!(!v.iter().any(|e| matches!(
            e,
            TechViolation::RowSum { .. } | TechViolation::Dominance { .. }
        )));
    }

    #[test]
    fn identity_tech_matches_base_model() {
        let c = cfg(&[0.0, 0.0, 0.9, 0.1], 0.05);
        let tech = NoisyTech::identity(3);
        for q in [0.05, 0.2, 0.5, 0.8, 0.99] {
            let noisy = noisy_benefit(&c, &tech, 2, q).unwrap();
            let base = benefit(&c, 2, q).unwrap();
            assert!((noisy - base).abs() <= 1e-10, "q={q}");
        }
    }

    #[test]
    fn benefit_vanishes_at_zero_and_is_positive_inside() {
        let c = cfg(&[0.0, 0.0, 0.9, 0.1], 0.05);
        let tech = leaky(3, 0.2);
        assert!(validate_tech(&tech, 3).is_empty());
        assert_eq!(noisy_benefit(&c, &tech, 2, 0.0).unwrap(), 0.0);
        for i in 1..20 {
            assert!(noisy_benefit(&c, &tech, 2, i as f64 * 0.05).unwrap() > 0.0);
        }
        assert!(noisy_benefit(&c, &tech, 1, 0.5).is_err());
    }

    #[test]
    fn solve_returns_stable_root_or_cost_error() {
        let c = cfg(&[0.0, 0.0, 0.9, 0.1], 0.03);
        let tech = leaky(3, 0.2);
        let root = noisy_solve(&c, &tech).unwrap();
        assert!(root.stable);
        assert_abs_diff_eq!(
            noisy_benefit(&c, &tech, 2, root.weight).unwrap(),
            0.03,
            epsilon = 1e-9
        );
        let r = noisy_report(&c, &tech, root.weight).unwrap();
        assert_abs_diff_eq!(
            r.surplus,
            1.0 - r.average_virtual_price - r.expected_technology_cost,
            epsilon = 1e-15
        );
        let pricey = c.with_search_cost(0.5).unwrap();
        assert!(matches!(
            noisy_solve(&pricey, &tech),
            Err(ModelError::CostTooLarge { .. })
        ));
    }
}
