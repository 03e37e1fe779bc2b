//! Bayesian-Nash equilibria: Diamond, pure-search and mixed-search.

use crate::error::{ModelError, Result};
use crate::hypergeom;
use crate::optimize::{bisect, golden_max, unit_slope};
use crate::pricing::{
    build_laws_unchecked, build_price_laws, MarketConfig, PriceLaw, PriceLaws, SearchMix,
};
use crate::quadrature::{rule64, GaussLegendre};

/// Clamp used in place of the open ends of the mix weight interval.
pub const WEIGHT_CLAMP: f64 = 1e-6;
const SLOPE_STEP: f64 = 1e-6;

/// Spending and purchase probability of a buyer searching `j` firms in an
/// `n`-seller market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketTerms {
    pub spending: f64,
    pub purchase: f64,
}

pub(crate) fn market_terms(
    config: &MarketConfig,
    law: &PriceLaw,
    n: usize,
    searched: usize,
    rule: &GaussLegendre,
) -> Result<MarketTerms> {
    if n == 0 {
        return Ok(MarketTerms {
            spending: 0.0,
            purchase: 0.0,
        });
    }
    let frame = config.frame(n, searched);
    let purchase = 1.0 - hypergeom::pmf(frame, 0)?;
    let spending = match law {
        PriceLaw::MonopolyAtom => config.valuation() * purchase,
        PriceLaw::MarginalCostAtom => 0.0,
        PriceLaw::Dispersed(d) => {
            let density = hypergeom::generating_poly(frame).derivative();
            d.integrate_against(rule, |x| density.eval(x))
        }
        PriceLaw::Unreached => {
            return Err(ModelError::InvalidEquilibrium(format!(
                "no price law for reachable n = {n}"
            )))
        }
    };
    Ok(MarketTerms { spending, purchase })
}

/// Virtual price `P_j` under the given laws: no purchase counts as paying `v`.
pub(crate) fn virtual_price_with(
    config: &MarketConfig,
    laws: &PriceLaws,
    searched: usize,
    rule: &GaussLegendre,
) -> Result<f64> {
    let v = config.valuation();
    let mut total = 0.0;
    for (n, &theta) in config.theta().weights().iter().enumerate() {
        if theta == 0.0 {
            continue;
        }
        let terms = market_terms(config, laws.get(n), n, searched, rule)?;
        total += theta * (terms.spending + v * (1.0 - terms.purchase));
    }
    Ok(total)
}

pub fn virtual_price(config: &MarketConfig, mix: &SearchMix, searched: usize) -> Result<f64> {
    if searched == 0 || searched > config.firms() {
        return Err(ModelError::Domain(format!(
            "search count {searched} outside 1..={}",
            config.firms()
        )));
    }
    if config.min_oligopoly().is_none() {
        return Ok(config.valuation());
    }
    let laws = build_price_laws(config, mix)?;
    virtual_price_with(config, &laws, searched, rule64())
}

fn check_mixed_index(config: &MarketConfig, k: usize) -> Result<usize> {
    let top = config.max_search()?;
    if k == 0 || k > top {
        return Err(ModelError::Domain(format!(
            "search count {k} outside 1..={top}"
        )));
    }
    Ok(top)
}

fn benefit_with_rule(
    config: &MarketConfig,
    k: usize,
    weight: f64,
    rule: &GaussLegendre,
) -> Result<f64> {
    check_mixed_index(config, k)?;
    let mix = SearchMix::new(config.firms(), k, weight)?;
    let laws = build_laws_unchecked(config, &mix)?;
    Ok(virtual_price_with(config, &laws, k, rule)?
        - virtual_price_with(config, &laws, k + 1, rule)?)
}

/// Gain from one more search, `P_k - P_{k+1}`, when buyers search `k` firms
/// with probability `weight` and `k + 1` otherwise.
pub fn benefit(config: &MarketConfig, k: usize, weight: f64) -> Result<f64> {
    benefit_with_rule(config, k, weight, rule64())
}

/// `benefit` with an explicit quadrature rule.
pub fn benefit_using(
    config: &MarketConfig,
    k: usize,
    weight: f64,
    rule: &GaussLegendre,
) -> Result<f64> {
    benefit_with_rule(config, k, weight, rule)
}

/// Same quantity through `-sum theta_n int p'_n (alpha_k - alpha_{k+1}) dx`.
pub fn benefit_by_parts(config: &MarketConfig, k: usize, weight: f64) -> Result<f64> {
    check_mixed_index(config, k)?;
    let mix = SearchMix::new(config.firms(), k, weight)?;
    let laws = build_laws_unchecked(config, &mix)?;
    let rule = rule64();
    let mut total = 0.0;
    for (n, &theta) in config.theta().weights().iter().enumerate() {
        if theta == 0.0 || n < 2 {
            continue;
        }
        let lo = hypergeom::generating_poly(config.frame(n, k));
        let hi = hypergeom::generating_poly(config.frame(n, k + 1));
        match laws.get(n) {
            PriceLaw::Dispersed(d) => {
                let gap = lo.combine(1.0, &hi, -1.0);
                total -= theta * rule.graded(|x| d.price_slope(x) * gap.eval(x), d.bend_scale());
            }
            PriceLaw::MarginalCostAtom => {
                total += theta * config.valuation() * (lo.coeffs()[0] - hi.coeffs()[0]);
            }
            _ => {}
        }
    }
    Ok(total)
}

/// Central-difference slope of the benefit curve.
pub fn benefit_slope(config: &MarketConfig, k: usize, weight: f64) -> Result<f64> {
    unit_slope(|q| benefit(config, k, q), weight, SLOPE_STEP)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedRoot {
    pub weight: f64,
    pub slope: f64,
    pub stable: bool,
}

/// Mix weights on `(0, 1)` at which the gain from one more search equals `cost`.
pub fn solve_mixed(config: &MarketConfig, k: usize, cost: f64) -> Result<Vec<MixedRoot>> {
    check_mixed_index(config, k)?;
    let f = |q: f64| benefit(config, k, q);
    let (lo, hi) = (WEIGHT_CLAMP, 1.0 - WEIGHT_CLAMP);
    let (peak, peak_value) = golden_max(f, lo, hi)?;
    let mut roots: Vec<f64> = Vec::new();
    if peak_value < cost {
        return Ok(Vec::new());
    }
    let g = |q: f64| Ok(benefit(config, k, q)? - cost);
    let left = f(lo)? - cost;
    if left < 0.0 {
        roots.push(bisect(g, lo, peak, -1.0)?);
    }
    let right = f(hi)? - cost;
    if right < 0.0 {
        roots.push(bisect(g, peak, hi, 1.0)?);
    }
    roots
        .into_iter()
        .map(|weight| {
            let slope = benefit_slope(config, k, weight)?;
            Ok(MixedRoot {
                weight,
                slope,
                stable: slope > 0.0,
            })
        })
        .collect()
}

/// `[lower, upper]` cost range supporting everyone searching exactly `k` firms.
pub fn pure_interval(config: &MarketConfig, k: usize) -> Result<(f64, f64)> {
    let top = config.max_search()?;
    if k < 2 || k > top {
        return Err(ModelError::Domain(format!(
            "pure search count {k} outside 2..={top}"
        )));
    }
    let laws = build_price_laws(config, &SearchMix::pure(config.firms(), k)?)?;
    let rule = rule64();
    let below = virtual_price_with(config, &laws, k - 1, rule)?;
    let at = virtual_price_with(config, &laws, k, rule)?;
    let above = virtual_price_with(config, &laws, k + 1, rule)?;
    Ok((at - above, below - at))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedRange {
    pub lower: f64,
    pub upper: f64,
    pub argmax: f64,
    /// Benefit with everyone searching `k + 1`.
    pub at_zero: f64,
    /// Benefit with everyone searching `k`.
    pub at_one: f64,
}

pub fn mixed_cost_range(config: &MarketConfig, k: usize) -> Result<MixedRange> {
    check_mixed_index(config, k)?;
    let at_zero = benefit(config, k, 0.0)?;
    let at_one = benefit(config, k, 1.0)?;
    let (peak, peak_value) =
        golden_max(|q| benefit(config, k, q), WEIGHT_CLAMP, 1.0 - WEIGHT_CLAMP)?;
    let (argmax, upper) = if peak_value >= at_zero.max(at_one) {
        (peak, peak_value)
    } else if at_zero >= at_one {
        (0.0, at_zero)
    } else {
        (1.0, at_one)
    };
    Ok(MixedRange {
        lower: at_zero.min(at_one),
        upper,
        argmax,
        at_zero,
        at_one,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffRow {
    pub k: usize,
    pub pure: Option<(f64, f64)>,
    pub mixed: MixedRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffTable {
    pub rows: Vec<CutoffRow>,
}

pub fn cutoffs(config: &MarketConfig) -> Result<CutoffTable> {
    let top = config.max_search()?;
    let rows = (1..=top)
        .map(|k| {
            Ok(CutoffRow {
                k,
                pure: if k >= 2 {
                    Some(pure_interval(config, k)?)
                } else {
                    None
                },
                mixed: mixed_cost_range(config, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CutoffTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumKind {
    Diamond,
    PureSearch { k: usize },
    MixedSearch { k: usize, weight: f64 },
}

impl EquilibriumKind {
    pub fn label(&self) -> &'static str {
        match self {
            EquilibriumKind::Diamond => "diamond",
            EquilibriumKind::PureSearch { .. } => "pure",
            EquilibriumKind::MixedSearch { .. } => "mixed",
        }
    }

    fn rank(&self) -> (u8, usize, f64) {
        match *self {
            EquilibriumKind::Diamond => (0, 0, 0.0),
            EquilibriumKind::PureSearch { k } => (1, k, 0.0),
            EquilibriumKind::MixedSearch { k, weight } => (2, k, weight),
        }
    }
}

/// Local stability under small perturbations of the search mix.
///
/// The Diamond outcome is reported as `Stable`: the gain from a second
/// search vanishes as the weight on single search tends to one, so small
/// deviations toward more search are not rewarded. This verdict is a
/// modelling convention rather than a derived result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

impl Stability {
    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }

    pub fn is_stable(&self) -> bool {
        *self == Stability::Stable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub laws: PriceLaws,
    pub stability: Stability,
    /// `benefit - c` for mixed search; distance to the nearer cutoff for pure search.
    pub indifference_gap: f64,
    /// `v` minus average virtual price and paid search cost.
    pub participation_slack: f64,
}

impl Equilibrium {
    pub fn mix(&self) -> SearchMix {
        self.laws.mix()
    }

    pub fn is_active(&self) -> bool {
        self.kind != EquilibriumKind::Diamond
    }
}

fn participation_slack(config: &MarketConfig, laws: &PriceLaws) -> Result<f64> {
    let weights = laws.mix().count_weights(config.firms());
    let rule = rule64();
    let mut outlay = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            outlay += w
                * (virtual_price_with(config, laws, j, rule)?
                    + (j - 1) as f64 * config.search_cost());
        }
    }
    Ok(config.valuation() - outlay)
}

fn diamond(config: &MarketConfig) -> Result<Equilibrium> {
    let laws = build_diamond_laws(config)?;
    Ok(Equilibrium {
        kind: EquilibriumKind::Diamond,
        stability: Stability::Stable,
        indifference_gap: 0.0,
        participation_slack: participation_slack(config, &laws)?,
        laws,
    })
}

fn build_diamond_laws(config: &MarketConfig) -> Result<PriceLaws> {
    let mix = SearchMix::pure(config.firms(), 1)?;
    match config.min_oligopoly() {
        Some(_) => build_laws_unchecked(config, &mix),
        None => crate::pricing::monopoly_laws(config, &mix),
    }
}

fn pure(config: &MarketConfig, k: usize, interval: (f64, f64)) -> Result<Equilibrium> {
    let laws = build_price_laws(config, &SearchMix::pure(config.firms(), k)?)?;
    let c = config.search_cost();
    let interior = c > interval.0 && c < interval.1;
    Ok(Equilibrium {
        kind: EquilibriumKind::PureSearch { k },
        stability: if interior {
            Stability::Stable
        } else {
            Stability::Marginal
        },
        indifference_gap: (c - interval.0).min(interval.1 - c),
        participation_slack: participation_slack(config, &laws)?,
        laws,
    })
}

fn mixed(config: &MarketConfig, k: usize, root: MixedRoot) -> Result<Equilibrium> {
    let laws = build_price_laws(config, &SearchMix::new(config.firms(), k, root.weight)?)?;
    Ok(Equilibrium {
        kind: EquilibriumKind::MixedSearch {
            k,
            weight: root.weight,
        },
        stability: if root.slope > 0.0 {
            Stability::Stable
        } else if root.slope < 0.0 {
            Stability::Unstable
        } else {
            Stability::Marginal
        },
        indifference_gap: benefit(config, k, root.weight)? - config.search_cost(),
        participation_slack: participation_slack(config, &laws)?,
        laws,
    })
}

/// Candidate profile at an arbitrary mix, with residuals computed as for an
/// equilibrium; useful for perturbation experiments.
pub fn candidate(config: &MarketConfig, mix: &SearchMix) -> Result<Equilibrium> {
    if mix.is_pure() && mix.lower() == 1 {
        return diamond(config);
    }
    if mix.is_pure() {
        return pure(config, mix.lower(), pure_interval(config, mix.lower())?);
    }
    let slope = benefit_slope(config, mix.lower(), mix.weight())?;
    mixed(
        config,
        mix.lower(),
        MixedRoot {
            weight: mix.weight(),
            slope,
            stable: slope > 0.0,
        },
    )
}

/// Every equilibrium at the config's search cost. Diamond comes first and
/// the rest are ordered by kind and search count.
pub fn enumerate(config: &MarketConfig) -> Result<Vec<Equilibrium>> {
    let mut out = vec![diamond(config)?];
    if config.monopoly_mass() >= 1.0 || config.min_oligopoly().is_none() {
        return Ok(out);
    }
    let c = config.search_cost();
    let top = config.max_search()?;
    for k in 2..=top {
        let interval = pure_interval(config, k)?;
        if c >= interval.0 && c <= interval.1 {
            out.push(pure(config, k, interval)?);
        }
    }
    for k in 1..=top {
        for root in solve_mixed(config, k, c)? {
            out.push(mixed(config, k, root)?);
        }
    }
    out.sort_by(|a, b| {
        a.kind
            .rank()
            .partial_cmp(&b.kind.rank())
            .expect("finite ranks")
    });
    Ok(out)
}

/// Cost bound below which the top mixed equilibrium is the unique stable
/// active-search outcome.
pub fn small_cost_threshold(config: &MarketConfig) -> Result<f64> {
    let top = config.max_search()?;
    if top == 1 {
        return Ok(mixed_cost_range(config, 1)?.upper);
    }
    Ok(pure_interval(config, 2)?
        .0
        .min(pure_interval(config, top)?.0))
}

pub fn stable_small_c(config: &MarketConfig) -> Result<Equilibrium> {
    let threshold = small_cost_threshold(config)?;
    if config.search_cost() >= threshold {
        return Err(ModelError::CostTooLarge { threshold });
    }
    let top = config.max_search()?;
    let all = enumerate(config)?;
    let mut stable_active = all
        .into_iter()
        .filter(|e| e.is_active() && e.stability.is_stable());
    let found = stable_active.next().ok_or_else(|| {
        ModelError::InvalidEquilibrium("no stable mixed root below the cost bound".into())
    })?;
    if stable_active.next().is_some() {
        return Err(ModelError::InvalidEquilibrium(
            "stable active equilibrium is not unique".into(),
        ));
    }
    match found.kind {
        EquilibriumKind::MixedSearch { k, .. } if k == top => Ok(found),
        _ => Err(ModelError::InvalidEquilibrium(
            "stable equilibrium is not the top mixed root".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(theta: &[f64], c: f64) -> MarketConfig {
        MarketConfig::new(theta.len() - 1, 1.0, c, theta.to_vec()).unwrap()
    }

    fn example() -> MarketConfig {
        cfg(&[0.0, 0.0, 0.9, 0.1], 0.05)
    }

    fn figure_one(c: f64) -> MarketConfig {
        cfg(&[0.0, 0.05, 0.9, 0.05], c)
    }

    #[test]
    fn virtual_price_closed_form_duopoly() {
        let c = cfg(&[0.0, 0.0, 1.0, 0.0], 0.05);
        let mix = SearchMix::pure(3, 2).unwrap();
        assert_abs_diff_eq!(
            virtual_price(&c, &mix, 2).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn virtual_price_without_oligopoly_is_valuation() {
        let c = cfg(&[0.4, 0.6, 0.0, 0.0], 0.05);
        let mix = SearchMix::pure(3, 2).unwrap();
        for j in 1..=3 {
            assert_eq!(virtual_price(&c, &mix, j).unwrap(), 1.0);
        }
    }

    // Frozen values from an adaptive-quadrature oracle (scipy.quad on the
    // rational integrands).
    #[test]
    fn cutoffs_match_oracle() {
        let (lo, hi) = pure_interval(&figure_one(0.05), 2).unwrap();
        assert_abs_diff_eq!(lo, 0.047_665_1, epsilon = 2e-7);
        assert_abs_diff_eq!(hi, 0.115_888_3, epsilon = 2e-7);
    }

    #[test]
    fn benefit_forms_agree() {
        let c = example();
        for k in 1..=2 {
            for q in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let direct = benefit(&c, k, q).unwrap();
                let parts = benefit_by_parts(&c, k, q).unwrap();
                assert!(
                    (direct - parts).abs() <= 1e-9,
                    "k={k} q={q}: {direct} vs {parts}"
                );
            }
        }
    }

    #[test]
    fn quadrature_cross_check() {
        let c = figure_one(0.05);
        for k in 1..=2 {
            for q in [1e-6, 1e-3, 0.3, 0.7, 1.0 - 1e-6] {
                let a = benefit(&c, k, q).unwrap();
                let b = benefit_using(&c, k, q, crate::quadrature::rule128()).unwrap();
                assert!((a - b).abs() <= 1e-10, "k={k} q={q}");
            }
        }
    }

    #[test]
    fn boundary_limits() {
        let c = example();
        assert_abs_diff_eq!(benefit(&c, 1, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(benefit(&c, 2, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(benefit(&c, 1, 1.0 - WEIGHT_CLAMP).unwrap() < 1e-6);
        let (lo2, _) = pure_interval(&c, 2).unwrap();
        assert!((benefit(&c, 2, 1.0 - WEIGHT_CLAMP).unwrap() - lo2).abs() <= 1e-6);
        let (_, hi2) = pure_interval(&c, 2).unwrap();
        assert!((benefit(&c, 1, 1e-9).unwrap() - hi2).abs() <= 1e-6);
        assert!(benefit(&c, 3, 0.5).is_err());
    }

    #[test]
    fn above_peak_has_no_roots() {
        let c = example();
        let range = mixed_cost_range(&c, 2).unwrap();
        assert!(solve_mixed(&c, 2, range.upper + 1e-6).unwrap().is_empty());
    }

    #[test]
    fn example_stable_root() {
        let c = example();
        let roots = solve_mixed(&c, 2, 0.05).unwrap();
        assert_eq!(roots.len(), 2);
        let stable: Vec<_> = roots.iter().filter(|r| r.stable).collect();
        assert_eq!(stable.len(), 1);
        assert_abs_diff_eq!(1.0 - stable[0].weight, 0.781_621, epsilon = 1e-5);
        assert!((benefit(&c, 2, stable[0].weight).unwrap() - 0.05).abs() <= 1e-9);
    }

    #[test]
    fn figure_one_small_cost_has_roots_on_both_segments() {
        let c = figure_one(0.02);
        let one = solve_mixed(&c, 1, 0.02).unwrap();
        let two = solve_mixed(&c, 2, 0.02).unwrap();
        assert!(!one.is_empty());
        assert!(two.iter().any(|r| r.stable));
    }

    #[test]
    fn enumerate_is_sorted_and_contains_diamond() {
        let eqs = enumerate(&figure_one(0.05)).unwrap();
        assert_eq!(eqs[0].kind, EquilibriumKind::Diamond);
        assert_eq!(eqs.iter().filter(|e| e.is_active()).count(), 4);
        for w in eqs.windows(2) {
            assert!(w[0].kind.rank() <= w[1].kind.rank());
        }
        for e in &eqs {
            assert!(e.participation_slack >= -1e-9);
        }
    }

    #[test]
    fn monopoly_only_gives_diamond() {
        let c = cfg(&[0.5, 0.5, 0.0, 0.0], 0.01);
        let eqs = enumerate(&c).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].kind, EquilibriumKind::Diamond);
    }

    #[test]
    fn stable_small_c_below_threshold() {
        let c = example().with_search_cost(0.03).unwrap();
        let eq = stable_small_c(&c).unwrap();
        assert!(matches!(eq.kind, EquilibriumKind::MixedSearch { k: 2, .. }));
        assert!(matches!(
            stable_small_c(&example()),
            Err(ModelError::CostTooLarge { .. })
        ));
    }

    #[test]
    fn stable_small_c_top_index_follows_min_oligopoly() {
        let c = cfg(&[0.0, 0.0, 0.0, 0.5, 0.5], 0.005);
        let eq = stable_small_c(&c).unwrap();
        assert!(matches!(eq.kind, EquilibriumKind::MixedSearch { k: 2, .. }));
    }
}
