//! Table builders behind each subcommand.

use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};
use availsearch_core::equilibrium::benefit;
use availsearch_core::equilibrium::{cutoffs, enumerate, Equilibrium, EquilibriumKind};
use availsearch_core::extensions::hetero::{
    het_benefit, het_peak, het_report, het_solve, HeterogeneityConfig,
};
use availsearch_core::extensions::noisy::{noisy_report, noisy_solve, NoisyTech};
use availsearch_core::oracle::{deviation_z, indifference_gap, profit_flatness, simulate};
use availsearch_core::outcomes::{
    conditional_price_fraction, report, sweep_cost, sweep_theta, Branch,
};
use availsearch_core::pricing::MarketConfig;

const EQUILIBRIUM_HEADER: [&str; 11] = [
    "kind",
    "k",
    "weight",
    "stability",
    "expected_price",
    "purchase_probability",
    "expected_searches",
    "search_expenditure",
    "surplus",
    "indifference_gap",
    "participation_slack",
];

fn equilibrium_row(config: &MarketConfig, eq: &Equilibrium) -> CliResult<Vec<Cell>> {
    let r = report(config, eq)?;
    let mix = eq.mix();
    Ok(vec![
        eq.kind.label().into(),
        mix.lower().into(),
        mix.weight().into(),
        eq.stability.label().into(),
        r.expected_price.into(),
        r.purchase_probability.into(),
        r.expected_searches.into(),
        r.search_expenditure.into(),
        r.surplus.into(),
        eq.indifference_gap.into(),
        eq.participation_slack.into(),
    ])
}

fn equilibrium_table<'a>(
    config: &MarketConfig,
    eqs: impl IntoIterator<Item = &'a Equilibrium>,
) -> CliResult<Table> {
    let mut t = Table::new(&EQUILIBRIUM_HEADER);
    for eq in eqs {
        t.push(equilibrium_row(config, eq)?);
    }
    Ok(t)
}

/// Every equilibrium at the configured search cost, Diamond first.
pub fn enumerate_table(config: &MarketConfig) -> CliResult<Table> {
    equilibrium_table(config, &enumerate(config)?)
}

fn stable_active(config: &MarketConfig) -> CliResult<Vec<Equilibrium>> {
    let found: Vec<_> = enumerate(config)?
        .into_iter()
        .filter(|e| e.is_active() && e.stability.is_stable())
        .collect();
    if found.is_empty() {
        return Err(CliError::NoEquilibrium(format!(
            "no stable active-search equilibrium at c = {}",
            config.search_cost()
        )));
    }
    Ok(found)
}

/// Stable equilibria with active search.
pub fn solve_table(config: &MarketConfig) -> CliResult<Table> {
    equilibrium_table(config, &stable_active(config)?)
}

pub fn cutoffs_table(config: &MarketConfig) -> CliResult<Table> {
    let mut t = Table::new(&[
        "k",
        "pure_lower",
        "pure_upper",
        "mixed_lower",
        "mixed_upper",
        "mixed_argmax",
    ]);
    for row in cutoffs(config)?.rows {
        t.push(vec![
            row.k.into(),
            row.pure.map(|p| p.0).into(),
            row.pure.map(|p| p.1).into(),
            row.mixed.lower.into(),
            row.mixed.upper.into(),
            row.mixed.argmax.into(),
        ]);
    }
    Ok(t)
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn branch_label(b: Branch) -> &'static str {
    match b {
        Branch::Mixed => "mixed",
        Branch::Pure => "pure",
    }
}

/// Moves up to `max_shift` of mass from `theta[from]` to `theta[to]`.
pub fn sweep_theta_table(
    config: &MarketConfig,
    from: usize,
    to: usize,
    max_shift: f64,
    points: usize,
) -> CliResult<Table> {
    let shifts = grid(0.0, max_shift, points);
    let sweep = sweep_theta(config, to, from, &shifts)?;
    let mut t = Table::new(&[
        "record",
        "shift",
        "theta_from",
        "theta_to",
        "branch",
        "k",
        "weight",
        "expected_price",
        "purchase_probability",
        "surplus",
        "appears",
    ]);
    for row in &sweep.rows {
        for (branch, point) in [(Branch::Mixed, &row.mixed), (Branch::Pure, &row.pure)] {
            if let Some(p) = point {
                t.push(vec![
                    "point".into(),
                    row.shift.into(),
                    row.theta[from].into(),
                    row.theta[to].into(),
                    branch_label(branch).into(),
                    p.k().into(),
                    p.weight().into(),
                    p.report.expected_price.into(),
                    p.report.purchase_probability.into(),
                    p.report.surplus.into(),
                    Cell::Empty,
                ]);
            }
        }
    }
    for b in &sweep.boundaries {
        let at = config.shifted(from, to, b.shift)?;
        t.push(vec![
            "boundary".into(),
            b.shift.into(),
            at.theta().get(from).into(),
            at.theta().get(to).into(),
            branch_label(b.branch).into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            b.appears.into(),
        ]);
    }
    Ok(t)
}

pub fn sweep_cost_table(
    config: &MarketConfig,
    lo: f64,
    hi: f64,
    points: usize,
) -> CliResult<Table> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Validation("cost-grid".into()));
    }
    let rows = sweep_cost(config, &grid(lo, hi, points))?;
    let mut t = Table::new(&[
        "cost",
        "kind",
        "k",
        "weight",
        "expected_price",
        "purchase_probability",
        "search_expenditure",
        "surplus",
    ]);
    for row in rows {
        for p in row.points {
            t.push(vec![
                row.cost.into(),
                p.equilibrium.kind.label().into(),
                p.k().into(),
                p.weight().into(),
                p.report.expected_price.into(),
                p.report.purchase_probability.into(),
                p.report.search_expenditure.into(),
                p.report.surplus.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn noisy_table(config: &MarketConfig, tech: &NoisyTech) -> CliResult<Table> {
    let root = noisy_solve(config, tech)?;
    let r = noisy_report(config, tech, root.weight)?;
    let mut t = Table::new(&[
        "weight",
        "slope",
        "stable",
        "expected_price",
        "purchase_probability",
        "average_virtual_price",
        "expected_technology_cost",
        "surplus",
    ]);
    t.push(vec![
        root.weight.into(),
        root.slope.into(),
        root.stable.into(),
        r.expected_price.into(),
        r.purchase_probability.into(),
        r.average_virtual_price.into(),
        r.expected_technology_cost.into(),
        r.surplus.into(),
    ]);
    Ok(t)
}

pub fn hetero_table(config: &HeterogeneityConfig) -> CliResult<Table> {
    let mut t = Table::new(&[
        "record",
        "weight",
        "ratio",
        "benefit",
        "slope",
        "stable",
        "expected_price",
        "purchase_probability",
        "search_expenditure",
        "surplus",
    ]);
    let (peak, peak_value) = het_peak(config)?;
    let push = |t: &mut Table,
                record: &str,
                weight: f64,
                slope: Option<f64>,
                stable: Option<bool>|
     -> CliResult<()> {
        let r = het_report(config, weight)?;
        t.push(vec![
            record.into(),
            weight.into(),
            r.ratio.into(),
            het_benefit(config, weight)?.into(),
            slope.into(),
            stable.into(),
            r.expected_price.into(),
            r.purchase_probability.into(),
            r.search_expenditure.into(),
            r.surplus.into(),
        ]);
        Ok(())
    };
    for root in het_solve(config)? {
        push(
            &mut t,
            "root",
            root.weight,
            Some(root.slope),
            Some(root.stable),
        )?;
    }
    debug_assert!(peak_value >= config.market().search_cost());
    push(&mut t, "peak", peak, None, None)?;
    Ok(t)
}

/// Monte Carlo check of every stable active equilibrium, plus a text
/// summary for the terminal.
pub fn validate_table(config: &MarketConfig, trials: u64, seed: u64) -> CliResult<(Table, String)> {
    let mut t = Table::new(&[
        "kind",
        "k",
        "weight",
        "trials",
        "seed",
        "price_paid",
        "price_se",
        "analytic_price",
        "price_z",
        "purchase_probability",
        "flatness_z",
        "indifference_gain",
        "indifference_z",
        "deviation_z",
    ]);
    let mut summary = String::new();
    for eq in stable_active(config)? {
        let mc = simulate(config, &eq, trials, seed)?;
        let analytic = report(config, &eq)?.expected_price;
        let flat = profit_flatness(&mc);
        let pure = eq.mix().is_pure();
        let gap = if pure { None } else { indifference_gap(&mc) };
        let deviation = pure.then(|| deviation_z(&mc));
        summary.push_str(&format!(
            "{} k={} q={:.6}: price {:.6} ± {:.6} (analytic {:.6}), flatness z {:.3}",
            eq.kind.label(),
            eq.mix().lower(),
            eq.mix().weight(),
            mc.price_paid.mean,
            mc.price_paid.se,
            analytic,
            flat
        ));
        if let Some(g) = &gap {
            summary.push_str(&format!(", indifference z {:.3}", g.z));
        }
        if let Some(d) = deviation {
            summary.push_str(&format!(", deviation z {d:.3}"));
        }
        summary.push('\n');
        t.push(vec![
            eq.kind.label().into(),
            eq.mix().lower().into(),
            eq.mix().weight().into(),
            Cell::Int(trials as i64),
            Cell::Text(seed.to_string()),
            mc.price_paid.mean.into(),
            mc.price_paid.se.into(),
            analytic.into(),
            mc.price_paid.z(analytic).into(),
            mc.purchase_probability.mean.into(),
            flat.into(),
            gap.map(|g| g.gain.mean).into(),
            gap.map(|g| g.z).into(),
            deviation.into(),
        ]);
    }
    Ok((t, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    BenefitCurve,
    SinglePriceShare,
    AvailabilityPrice,
    AvailabilitySurplus,
    WorkedExample,
}

pub const FIGURE_ONE_COSTS: [f64; 3] = [0.02, 0.05, 0.11];

pub fn figure_one_config(cost: f64) -> MarketConfig {
    MarketConfig::new(3, 1.0, cost, vec![0.0, 0.05, 0.9, 0.05]).expect("fixed config")
}

pub fn availability_config(theta3: f64) -> MarketConfig {
    MarketConfig::new(3, 1.0, 0.04, vec![0.0, 0.0, 1.0 - theta3, theta3]).expect("fixed config")
}

pub fn example_configs() -> [MarketConfig; 2] {
    [
        MarketConfig::new(3, 1.0, 0.05, vec![0.0, 0.0, 0.9, 0.1]).expect("fixed config"),
        MarketConfig::new(3, 1.0, 0.05, vec![0.0, 0.0, 0.75, 0.25]).expect("fixed config"),
    ]
}

/// Benefit curve on the joined axis `s` in `[0, 2]`: at `s = k - 1` all
/// buyers search `k` firms, and moving right shifts weight to `k + 1`.
fn figure_benefit_curve(points: usize) -> CliResult<Table> {
    let mut t = Table::new(&[
        "record",
        "axis",
        "k",
        "weight",
        "benefit",
        "cost",
        "stability",
    ]);
    let config = figure_one_config(FIGURE_ONE_COSTS[0]);
    let steps = points.max(2);
    for k in 1..=2 {
        for i in 0..=steps {
            let weight = 1.0 - i as f64 / steps as f64;
            t.push(vec![
                "curve".into(),
                ((k - 1) as f64 + 1.0 - weight).into(),
                k.into(),
                weight.into(),
                benefit(&config, k, weight)?.into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
    }
    for cost in FIGURE_ONE_COSTS {
        let at = figure_one_config(cost);
        for eq in enumerate(&at)?.iter().filter(|e| e.is_active()) {
            let (k, weight) = (eq.mix().lower(), eq.mix().weight());
            t.push(vec![
                "intersection".into(),
                ((k - 1) as f64 + 1.0 - weight).into(),
                k.into(),
                weight.into(),
                Cell::Empty,
                cost.into(),
                eq.stability.label().into(),
            ]);
        }
    }
    Ok(t)
}

fn figure_single_price_share() -> CliResult<Table> {
    let mut t = Table::new(&["n", "fraction"]);
    for n in 1..=10 {
        t.push(vec![n.into(), conditional_price_fraction(10, 3, n)?.into()]);
    }
    Ok(t)
}

fn figure_availability(points: usize, surplus: bool) -> CliResult<Table> {
    let column = if surplus {
        ["mixed_surplus", "pure_surplus"]
    } else {
        ["mixed_price", "pure_price"]
    };
    let mut t = Table::new(&["theta3", "mixed_weight", column[0], "pure_k", column[1]]);
    let template = availability_config(0.1);
    let shifts = grid(0.0, 0.4, points.max(2));
    let sweep = sweep_theta(&template, 3, 2, &shifts)?;
    let pick = |r: &availsearch_core::outcomes::OutcomeReport| {
        if surplus {
            r.surplus
        } else {
            r.expected_price
        }
    };
    for row in &sweep.rows {
        t.push(vec![
            row.theta[3].into(),
            row.mixed.as_ref().map(|m| m.weight()).into(),
            row.mixed.as_ref().map(|m| pick(&m.report)).into(),
            row.pure.as_ref().map(|p| p.k()).into(),
            row.pure.as_ref().map(|p| pick(&p.report)).into(),
        ]);
    }
    Ok(t)
}

/// Stable mixed equilibrium with the largest search count.
pub fn stable_mixed(config: &MarketConfig) -> CliResult<Equilibrium> {
    enumerate(config)?
        .into_iter()
        .filter(|e| {
            matches!(e.kind, EquilibriumKind::MixedSearch { .. }) && e.stability.is_stable()
        })
        .max_by_key(|e| e.mix().lower())
        .ok_or_else(|| CliError::NoEquilibrium("no stable mixed equilibrium".into()))
}

fn figure_worked_example() -> CliResult<Table> {
    let mut t = Table::new(&[
        "theta2",
        "theta3",
        "weight_two",
        "share_three",
        "expected_price",
        "purchase_probability",
        "search_expenditure",
        "surplus",
    ]);
    for config in example_configs() {
        let eq = stable_mixed(&config)?;
        let r = report(&config, &eq)?;
        let q = eq.mix().weight();
        t.push(vec![
            config.theta().get(2).into(),
            config.theta().get(3).into(),
            q.into(),
            (1.0 - q).into(),
            r.expected_price.into(),
            r.purchase_probability.into(),
            r.search_expenditure.into(),
            r.surplus.into(),
        ]);
    }
    Ok(t)
}

pub fn figure_table(figure: Figure, points: usize) -> CliResult<Table> {
    match figure {
        Figure::BenefitCurve => figure_benefit_curve(points),
        Figure::SinglePriceShare => figure_single_price_share(),
        Figure::AvailabilityPrice => figure_availability(points, false),
        Figure::AvailabilitySurplus => figure_availability(points, true),
        Figure::WorkedExample => figure_worked_example(),
    }
}
