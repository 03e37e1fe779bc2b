mod common;

use availsearch_core::pricing::{build_price_laws, price_cdf, MarketConfig, PriceLaw, SearchMix};
use availsearch_core::ModelError;
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    (0..64).map(|i| i as f64 / 63.0).collect()
}

fn check_laws(config: &MarketConfig, mix: &SearchMix) -> Result<(), TestCaseError> {
    let laws = build_price_laws(config, mix).unwrap();
    let v = config.valuation();
    for (n, law) in laws.iter() {
        if let PriceLaw::Dispersed(d) = law {
            prop_assert!(d.floor() > 0.0 && d.floor() < v);
            prop_assert!((d.price_at(0.0) - v).abs() <= 1e-15 * v);
            let mut prev = f64::INFINITY;
            for x in grid() {
                let p = d.price_at(x);
                prop_assert!(
                    (p * d.sale_weight().eval(x) / n as f64 - d.profit()).abs() <= 1e-10 * v
                );
                prop_assert!(
                    prev - p >= 1e-12 * v || prev.is_infinite(),
                    "n={} x={}",
                    n,
                    x
                );
                prop_assert!((price_cdf(d, p).unwrap() - x).abs() <= 1e-9);
                prev = p;
            }
            prop_assert!((d.price_at(1.0) - d.floor()).abs() <= 1e-14);
        }
    }
    Ok(())
}

fn arb_config() -> impl Strategy<Value = MarketConfig> {
    (3usize..=9)
        .prop_flat_map(|firms| {
            (
                Just(firms),
                prop::collection::vec(0.0f64..1.0, firms + 1),
                0usize..firms,
            )
        })
        .prop_map(|(firms, mut raw, zeroed)| {
            raw[zeroed] = 0.0;
            raw[2 + zeroed % (firms - 1)] += 0.05;
            let sum: f64 = raw.iter().sum();
            let mut theta: Vec<f64> = raw.iter().map(|w| w / sum).collect();
            let drift: f64 = 1.0 - theta.iter().sum::<f64>();
            theta[firms] += drift;
            MarketConfig::new(firms, 1.0, 0.05, theta).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dispersed_laws_are_well_formed(config in arb_config(), k_frac in 0.0f64..1.0, q in 0.001f64..=1.0) {
        let top = config.max_search().unwrap();
        let k = 1 + ((k_frac * top as f64) as usize).min(top - 1);
        let mix = SearchMix::new(config.firms(), k, q).unwrap();
        check_laws(&config, &mix)?;
    }

    #[test]
    fn all_comparing_buyers_break_dispersion(config in arb_config()) {
        let n_min = config.min_oligopoly().unwrap();
        let top = config.max_search().unwrap();
        let mix = SearchMix::new(config.firms(), top, 0.0).unwrap();
        prop_assert_eq!(build_price_laws(&config, &mix), Err(ModelError::DegenerateDispersion { n: n_min }));
        if top < config.firms() {
            let pure = SearchMix::pure(config.firms(), top + 1).unwrap();
            prop_assert_eq!(build_price_laws(&config, &pure), Err(ModelError::DegenerateDispersion { n: n_min }));
        }
    }
}

#[test]
fn boundary_between_dispersion_and_marginal_cost() {
    let config = common::market(&[0.0, 0.0, 0.2, 0.2, 0.3, 0.3], 0.05);
    let mix = SearchMix::new(5, 3, 0.4).unwrap();
    let laws = build_price_laws(&config, &mix).unwrap();
    for n in 2..=3 {
        assert!(laws.get(n).as_dispersed().is_some(), "n={n}");
    }
    for n in 4..=5 {
        assert_eq!(laws.get(n), &PriceLaw::MarginalCostAtom, "n={n}");
    }
}
