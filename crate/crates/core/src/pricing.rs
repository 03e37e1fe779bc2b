//! Market primitives and seller price laws for each realised market size.

use crate::error::{ModelError, Result};
use crate::hypergeom::{self, SampleFrame, MAX_FIRMS};
use crate::poly::Poly;
use crate::quadrature::GaussLegendre;

const THETA_TOLERANCE: f64 = 1e-12;
const BISECTION_TOLERANCE: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Availability distribution over the number of active sellers `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Availability(Vec<f64>);

impl Availability {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ModelError::Validation("theta-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > THETA_TOLERANCE {
            return Err(ModelError::Validation("theta-sum"));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, n: usize) -> f64 {
        self.0.get(n).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    firms: usize,
    valuation: f64,
    search_cost: f64,
    theta: Availability,
}

impl MarketConfig {
    pub fn new(firms: usize, valuation: f64, search_cost: f64, theta: Vec<f64>) -> Result<Self> {
        if !(3..=MAX_FIRMS).contains(&firms) {
            return Err(ModelError::Validation("firm-count"));
        }
        if !(valuation.is_finite() && valuation > 0.0) {
            return Err(ModelError::Validation("valuation"));
        }
        if !(search_cost.is_finite() && search_cost > 0.0) {
            return Err(ModelError::Validation("search-cost"));
        }
        if theta.len() != firms + 1 {
            return Err(ModelError::Validation("theta-length"));
        }
        Ok(Self {
            firms,
            valuation,
            search_cost,
            theta: Availability::new(theta)?,
        })
    }

    pub fn firms(&self) -> usize {
        self.firms
    }

    pub fn valuation(&self) -> f64 {
        self.valuation
    }

    pub fn search_cost(&self) -> f64 {
        self.search_cost
    }

    pub fn theta(&self) -> &Availability {
        &self.theta
    }

    pub fn with_search_cost(&self, search_cost: f64) -> Result<Self> {
        Self::new(
            self.firms,
            self.valuation,
            search_cost,
            self.theta.0.clone(),
        )
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.firms, self.valuation, self.search_cost, theta)
    }

    /// Moves `amount` of probability from `theta_from` to `theta_to`.
    pub fn shifted(&self, from: usize, to: usize, amount: f64) -> Result<Self> {
        if from > self.firms || to > self.firms {
            return Err(ModelError::Domain(format!(
                "shift index outside 0..={}",
                self.firms
            )));
        }
        let mut theta = self.theta.0.clone();
        theta[from] -= amount;
        theta[to] += amount;
        if theta[from] < -THETA_TOLERANCE {
            return Err(ModelError::InvalidShift { index: from });
        }
        if theta[to] < -THETA_TOLERANCE {
            return Err(ModelError::InvalidShift { index: to });
        }
        theta[from] = theta[from].max(0.0);
        theta[to] = theta[to].max(0.0);
        self.with_theta(theta)
    }

    /// Probability that at most one seller is active.
    pub fn monopoly_mass(&self) -> f64 {
        self.theta.get(0) + self.theta.get(1)
    }

    /// Smallest oligopoly size occurring with positive probability.
    pub fn min_oligopoly(&self) -> Option<usize> {
        (2..=self.firms).find(|&n| self.theta.get(n) > 0.0)
    }

    pub fn require_min_oligopoly(&self) -> Result<usize> {
        self.min_oligopoly().ok_or(ModelError::NoOligopoly)
    }

    /// Largest search count that can be part of an equilibrium, `N - n_min + 1`.
    pub fn max_search(&self) -> Result<usize> {
        Ok(self.firms - self.require_min_oligopoly()? + 1)
    }

    pub(crate) fn frame(&self, active: usize, searched: usize) -> SampleFrame {
        SampleFrame::new(self.firms, active, searched).expect("frame built from a validated config")
    }
}

/// Buyer strategy: search `k` firms with probability `q`, `k + 1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchMix {
    lower: usize,
    weight: f64,
}

impl SearchMix {
    pub fn new(firms: usize, lower: usize, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(ModelError::Domain(format!(
                "mix weight {weight} outside [0, 1]"
            )));
        }
        let top = if weight < 1.0 { firms - 1 } else { firms };
        if lower == 0 || lower > top {
            return Err(ModelError::Domain(format!(
                "search count {lower} outside 1..={top}"
            )));
        }
        Ok(Self { lower, weight })
    }

    pub fn pure(firms: usize, lower: usize) -> Result<Self> {
        Self::new(firms, lower, 1.0)
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_pure(&self) -> bool {
        self.weight == 1.0
    }

    /// Smallest search count played with positive probability.
    pub fn min_count(&self) -> usize {
        if self.weight > 0.0 {
            self.lower
        } else {
            self.lower + 1
        }
    }

    /// Probability of each search count `1..=N` (index 0 unused).
    pub fn count_weights(&self, firms: usize) -> Vec<f64> {
        let mut w = vec![0.0; firms + 1];
        w[self.lower] += self.weight;
        if self.weight < 1.0 {
            w[self.lower + 1] += 1.0 - self.weight;
        }
        w
    }

    pub fn expected_searches(&self) -> f64 {
        self.weight * self.lower as f64 + (1.0 - self.weight) * (self.lower + 1) as f64
    }
}

/// Mixture of generating polynomials weighted by search-count probabilities.
fn mixture_poly(config: &MarketConfig, mix: &SearchMix, n: usize) -> Poly {
    let lo = hypergeom::generating_poly(config.frame(n, mix.lower));
    if mix.weight < 1.0 {
        let hi = hypergeom::generating_poly(config.frame(n, mix.lower + 1));
        lo.combine(mix.weight, &hi, 1.0 - mix.weight)
    } else {
        lo
    }
}

fn check_args(config: &MarketConfig, n: usize, x: f64) -> Result<()> {
    if n > config.firms {
        return Err(ModelError::Domain(format!(
            "market size {n} exceeds {}",
            config.firms
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(ModelError::Domain(format!(
            "survival level {x} outside [0, 1]"
        )));
    }
    Ok(())
}

pub fn beta(config: &MarketConfig, mix: &SearchMix, n: usize, x: f64) -> Result<f64> {
    check_args(config, n, x)?;
    Ok(mixture_poly(config, mix, n).eval(x))
}

pub fn beta_prime(config: &MarketConfig, mix: &SearchMix, n: usize, x: f64) -> Result<f64> {
    check_args(config, n, x)?;
    Ok(mixture_poly(config, mix, n).derivative().eval(x))
}

/// Inverse price function `v beta'(0) / beta'(x)`.
pub fn price_inverse(config: &MarketConfig, mix: &SearchMix, n: usize, x: f64) -> Result<f64> {
    check_args(config, n, x)?;
    let law = DispersedLaw::new(
        n,
        config.valuation,
        mixture_poly(config, mix, n).derivative(),
    )?;
    Ok(law.price_at(x))
}

/// Continuous price law of an `n`-seller market, stored through the sale
/// weight `beta'(x)`; a seller at survival level `x` sells to a share
/// `beta'(x) / n` of buyers.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersedLaw {
    active: usize,
    valuation: f64,
    sale_weight: Poly,
    sale_slope: Poly,
    floor: f64,
    profit: f64,
}

impl DispersedLaw {
    pub fn new(active: usize, valuation: f64, sale_weight: Poly) -> Result<Self> {
        let at_zero = sale_weight.eval(0.0);
        if at_zero.is_nan() || at_zero <= 0.0 || active == 0 {
            return Err(ModelError::DegenerateDispersion { n: active });
        }
        let at_one = sale_weight.eval(1.0);
        Ok(Self {
            active,
            valuation,
            sale_slope: sale_weight.derivative(),
            floor: valuation * at_zero / at_one,
            profit: valuation * at_zero / active as f64,
            sale_weight,
        })
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn valuation(&self) -> f64 {
        self.valuation
    }

    /// Lowest price in the support.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Per-seller profit, constant across the support.
    pub fn profit(&self) -> f64 {
        self.profit
    }

    pub fn sale_weight(&self) -> &Poly {
        &self.sale_weight
    }

    pub fn price_at(&self, x: f64) -> f64 {
        self.valuation * self.sale_weight.coeffs()[0] / self.sale_weight.eval(x)
    }

    /// Derivative of the inverse price function.
    pub fn price_slope(&self, x: f64) -> f64 {
        let w = self.sale_weight.eval(x);
        -self.valuation * self.sale_weight.coeffs()[0] * self.sale_slope.eval(x) / (w * w)
    }

    /// Characteristic width of the region near `x = 0` where the inverse
    /// price function bends sharply.
    pub fn bend_scale(&self) -> f64 {
        self.sale_weight.eval(0.0) / self.sale_weight.eval(1.0)
    }

    /// `integral_0^1 p(x) g(x) dx` on panels adapted to the law.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, rule: &GaussLegendre, g: F) -> f64 {
        rule.graded(|x| self.price_at(x) * g(x), self.bend_scale())
    }

    /// Survival level at price `p`, by bisection.
    pub fn survival(&self, price: f64) -> Result<f64> {
        let slack = 1e-12 * self.valuation;
        if !(price >= self.floor - slack && price <= self.valuation + slack) {
            return Err(ModelError::OutOfSupport {
                price,
                floor: self.floor,
                ceiling: self.valuation,
            });
        }
        if price >= self.valuation {
            return Ok(0.0);
        }
        if price <= self.floor {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if self.price_at(mid) > price {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_TOLERANCE {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn price_cdf(law: &DispersedLaw, price: f64) -> Result<f64> {
    law.survival(price)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriceLaw {
    Unreached,
    MonopolyAtom,
    MarginalCostAtom,
    Dispersed(DispersedLaw),
}

impl PriceLaw {
    pub fn tag(&self) -> &'static str {
        match self {
            PriceLaw::Unreached => "unreached",
            PriceLaw::MonopolyAtom => "monopoly",
            PriceLaw::MarginalCostAtom => "marginal-cost",
            PriceLaw::Dispersed(_) => "dispersed",
        }
    }

    pub fn as_dispersed(&self) -> Option<&DispersedLaw> {
        match self {
            PriceLaw::Dispersed(law) => Some(law),
            _ => None,
        }
    }
}

/// Seller strategies for every market size `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceLaws {
    mix: SearchMix,
    laws: Vec<PriceLaw>,
}

impl PriceLaws {
    pub fn mix(&self) -> SearchMix {
        self.mix
    }

    pub fn get(&self, n: usize) -> &PriceLaw {
        &self.laws[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &PriceLaw)> {
        self.laws.iter().enumerate()
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }
}

/// Equilibrium laws for a given buyer mix.
pub fn build_price_laws(config: &MarketConfig, mix: &SearchMix) -> Result<PriceLaws> {
    let n_min = config.require_min_oligopoly()?;
    if config.monopoly_mass() >= 1.0 {
        return Err(ModelError::NoOligopoly);
    }
    if mix.min_count() > config.firms - n_min + 1 {
        return Err(ModelError::DegenerateDispersion { n: n_min });
    }
    build_laws_unchecked(config, mix)
}

/// As `build_price_laws` without the locked-in buyer requirement; used for
/// boundary evaluations where every active market prices at marginal cost.
pub(crate) fn build_laws_unchecked(config: &MarketConfig, mix: &SearchMix) -> Result<PriceLaws> {
    let n_min = config.require_min_oligopoly()?;
    let firms = config.firms;
    let top_dispersed = (firms + 1).saturating_sub(mix.min_count());
    let diamond = mix.is_pure() && mix.lower == 1;
    let mut laws = Vec::with_capacity(firms + 1);
    for n in 0..=firms {
        let law = if n == 0 {
            PriceLaw::Unreached
        } else if n == 1 || diamond {
            PriceLaw::MonopolyAtom
        } else if n < n_min {
            PriceLaw::Unreached
        } else if n <= top_dispersed {
            let weight = mixture_poly(config, mix, n).derivative();
            PriceLaw::Dispersed(DispersedLaw::new(n, config.valuation, weight)?)
        } else {
            PriceLaw::MarginalCostAtom
        };
        laws.push(law);
    }
    Ok(PriceLaws { mix: *mix, laws })
}

/// Laws for a market without oligopoly: any active seller charges `v`.
pub(crate) fn monopoly_laws(config: &MarketConfig, mix: &SearchMix) -> Result<PriceLaws> {
    let laws = (0..=config.firms)
        .map(|n| {
            if n == 0 {
                PriceLaw::Unreached
            } else {
                PriceLaw::MonopolyAtom
            }
        })
        .collect();
    Ok(PriceLaws { mix: *mix, laws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(theta: &[f64]) -> MarketConfig {
        MarketConfig::new(theta.len() - 1, 1.0, 0.05, theta.to_vec()).unwrap()
    }

    #[test]
    fn config_validation_names_invariant() {
        assert_eq!(
            MarketConfig::new(3, 1.0, 0.05, vec![0.0, 0.0, 0.9, 0.09]),
            Err(ModelError::Validation("theta-sum"))
        );
        assert_eq!(
            MarketConfig::new(3, 1.0, 0.05, vec![0.0, 0.0, 1.0]),
            Err(ModelError::Validation("theta-length"))
        );
        assert_eq!(
            MarketConfig::new(2, 1.0, 0.05, vec![0.0, 0.0, 1.0]),
            Err(ModelError::Validation("firm-count"))
        );
        assert_eq!(
            MarketConfig::new(3, 1.0, 0.0, vec![0.0, 0.0, 1.0, 0.0]),
            Err(ModelError::Validation("search-cost"))
        );
    }

    #[test]
    fn min_oligopoly_and_shift() {
        let cfg = config(&[0.0, 0.1, 0.0, 0.5, 0.4]);
        assert_eq!(cfg.min_oligopoly(), Some(3));
        assert_eq!(cfg.max_search().unwrap(), 2);
        let moved = cfg.shifted(3, 4, 0.2).unwrap();
        assert_abs_diff_eq!(moved.theta().get(4), 0.6, epsilon = 1e-15);
        assert_eq!(
            cfg.shifted(1, 4, 0.2),
            Err(ModelError::InvalidShift { index: 1 })
        );
    }

    #[test]
    fn beta_examples() {
        let cfg = config(&[0.0, 0.0, 1.0, 0.0]);
        let pure2 = SearchMix::pure(3, 2).unwrap();
        assert_abs_diff_eq!(
            beta_prime(&cfg, &pure2, 2, 1.0).unwrap(),
            4.0 / 3.0,
            epsilon = 1e-15
        );
        let half = SearchMix::new(3, 2, 0.5).unwrap();
        assert_abs_diff_eq!(
            beta_prime(&cfg, &half, 2, 0.0).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        let frame = SampleFrame::new(3, 2, 2).unwrap();
        assert_abs_diff_eq!(
            beta(&cfg, &pure2, 2, 0.4).unwrap(),
            hypergeom::gen(frame, 0.4).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn duopoly_closed_form_law() {
        let cfg = config(&[0.0, 0.0, 1.0, 0.0]);
        let pure2 = SearchMix::pure(3, 2).unwrap();
        for x in [0.0, 0.25, 0.6, 1.0] {
            assert_abs_diff_eq!(
                price_inverse(&cfg, &pure2, 2, x).unwrap(),
                1.0 / (1.0 + x),
                epsilon = 1e-15
            );
        }
        let laws = build_price_laws(&cfg, &pure2).unwrap();
        let law = laws.get(2).as_dispersed().unwrap();
        assert_abs_diff_eq!(law.floor(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.profit(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(price_cdf(law, 0.8).unwrap(), 0.25, epsilon = 1e-11);
        assert_eq!(price_cdf(law, 1.0).unwrap(), 0.0);
        assert_eq!(price_cdf(law, 0.5).unwrap(), 1.0);
        assert!(matches!(
            price_cdf(law, 0.4),
            Err(ModelError::OutOfSupport { .. })
        ));
    }

    #[test]
    fn law_structure_for_standard_market() {
        let cfg = config(&[0.0, 0.0, 0.9, 0.1]);
        let mix = SearchMix::new(3, 2, 0.3).unwrap();
        let laws = build_price_laws(&cfg, &mix).unwrap();
        assert_eq!(laws.get(0), &PriceLaw::Unreached);
        assert_eq!(laws.get(1), &PriceLaw::MonopolyAtom);
        assert!(laws.get(2).as_dispersed().is_some());
        assert_eq!(laws.get(3), &PriceLaw::MarginalCostAtom);
    }

    #[test]
    fn full_availability_prices_at_cost() {
        for firms in 4..=7 {
            let mut theta = vec![0.0; firms + 1];
            theta[firms] = 1.0;
            let cfg = config(&theta);
            let mix = SearchMix::pure(firms, 2).unwrap();
            assert!(build_price_laws(&cfg, &mix).is_err());
            let laws = build_laws_unchecked(&cfg, &mix).unwrap();
            assert_eq!(laws.get(firms), &PriceLaw::MarginalCostAtom);
            assert_eq!(laws.get(firms - 1), &PriceLaw::Unreached);
        }
    }

    #[test]
    fn no_oligopoly_rejected() {
        let cfg = config(&[0.0, 1.0, 0.0, 0.0]);
        let mix = SearchMix::pure(3, 2).unwrap();
        assert_eq!(build_price_laws(&cfg, &mix), Err(ModelError::NoOligopoly));
    }

    #[test]
    fn all_comparing_buyers_rejected() {
        let cfg = config(&[0.0, 0.0, 0.9, 0.1]);
        let mix = SearchMix::new(3, 2, 0.0).unwrap();
        assert_eq!(
            build_price_laws(&cfg, &mix),
            Err(ModelError::DegenerateDispersion { n: 2 })
        );
        assert_eq!(
            build_price_laws(&cfg, &SearchMix::pure(3, 3).unwrap()),
            Err(ModelError::DegenerateDispersion { n: 2 })
        );
        let relaxed = build_laws_unchecked(&cfg, &mix).unwrap();
        assert_eq!(relaxed.get(2), &PriceLaw::MarginalCostAtom);
    }

    #[test]
    fn single_search_gives_monopoly_pricing() {
        let cfg = config(&[0.0, 0.0, 0.9, 0.1]);
        let laws = build_price_laws(&cfg, &SearchMix::pure(3, 1).unwrap()).unwrap();
        for n in 1..=3 {
            assert_eq!(laws.get(n), &PriceLaw::MonopolyAtom);
        }
    }
}
