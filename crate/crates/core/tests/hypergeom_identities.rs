use availsearch_core::hypergeom::{
    binomial, dominance_gap_exact, gauss_identity_residual, mode, pmf, pmf_numerator, psi,
    SampleFrame,
};
use availsearch_core::ModelError;
use proptest::prelude::*;

fn frames(max_firms: usize) -> impl Iterator<Item = SampleFrame> {
    (3..=max_firms).flat_map(|firms| {
        (0..=firms)
            .flat_map(move |n| (1..=firms).map(move |k| SampleFrame::new(firms, n, k).unwrap()))
    })
}

#[test]
fn normalization_exact_and_float() {
    for f in frames(12) {
        let exact: u128 = (0..=f.searched()).map(|m| pmf_numerator(f, m)).sum();
        assert_eq!(exact, binomial(f.firms(), f.searched()), "{f:?}");
        let float: f64 = (0..=f.searched()).map(|m| pmf(f, m).unwrap()).sum();
        assert!((float - 1.0).abs() <= 1e-14, "{f:?}");
    }
}

#[test]
fn cumulative_dominance() {
    for firms in 3..=12 {
        for n in 2..=firms {
            for k in 1..firms {
                for l in 0..=k + 1 {
                    let (num, _) = dominance_gap_exact(firms, n, k, l).unwrap();
                    assert!(num >= 0, "N={firms} n={n} k={k} l={l}");
                }
            }
        }
    }
}

#[test]
fn single_peaked() {
    for f in frames(12) {
        let seq: Vec<u128> = (0..=f.searched()).map(|m| pmf_numerator(f, m)).collect();
        let mut fell = false;
        for w in seq.windows(2) {
            if w[1] < w[0] {
                fell = true;
            } else if fell {
                assert!(w[1] <= w[0], "{f:?}: {seq:?}");
            }
        }
    }
}

#[test]
fn mode_formula_is_smallest_maximiser() {
    for f in frames(12) {
        let seq: Vec<u128> = (0..=f.searched()).map(|m| pmf_numerator(f, m)).collect();
        let best = *seq.iter().max().unwrap();
        let first = seq.iter().position(|&x| x == best).unwrap();
        assert_eq!(mode(f), first, "{f:?}: {seq:?}");
    }
}

#[test]
fn ratio_dominance() {
    for firms in 3..=12 {
        for n in 0..=firms {
            for k in 1..firms {
                let lo = SampleFrame::new(firms, n, k).unwrap();
                let hi = SampleFrame::new(firms, n, k + 1).unwrap();
                for m in 0..k {
                    let (a0, a1) = (pmf_numerator(lo, m), pmf_numerator(lo, m + 1));
                    let (b0, b1) = (pmf_numerator(hi, m), pmf_numerator(hi, m + 1));
                    if a0 > 0 && a1 > 0 && b0 > 0 && b1 > 0 {
                        // a1 / a0 < b1 / b0 in exact arithmetic
                        assert!(a1 * b0 < b1 * a0, "N={firms} n={n} k={k} m={m}");
                    }
                }
            }
        }
    }
}

#[test]
fn psi_zero_at_origin_positive_elsewhere() {
    // Only markets with locked-in buyers at k searches, n <= N - k + 1; for
    // larger n both single-price probabilities vanish and psi is identically 0.
    for firms in 3..=10 {
        for k in 1..firms {
            for n in 2..=firms - k + 1 {
                assert_eq!(psi(firms, n, k, 0.0).unwrap(), 0.0);
                for i in 1..=100 {
                    let x = i as f64 / 100.0;
                    assert!(
                        psi(firms, n, k, x).unwrap() > 0.0,
                        "N={firms} n={n} k={k} x={x}"
                    );
                }
            }
        }
    }
}

#[test]
fn gauss_identity_where_applicable() {
    let mut checked = 0;
    for f in frames(12) {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            match gauss_identity_residual(f, x) {
                Ok(r) => {
                    assert!(r <= 1e-12, "{f:?} x={x}: {r}");
                    checked += 1;
                }
                Err(ModelError::IdentityInapplicable(lower)) => assert!(lower < 1),
                Err(e) => panic!("{e}"),
            }
        }
    }
    assert!(checked > 1_000);
}

#[test]
fn single_price_probability_falls_with_search_at_edge() {
    for firms in 3..=12 {
        for k in 1..firms {
            let n = firms - k + 1;
            let a = pmf(SampleFrame::new(firms, n, k).unwrap(), 1).unwrap();
            let b = pmf(SampleFrame::new(firms, n, k + 1).unwrap(), 1).unwrap();
            assert!(a > b, "N={firms} k={k}");
        }
    }
}

proptest! {
    #[test]
    fn gen_at_one_is_one(firms in 3usize..=40, n_frac in 0.0f64..=1.0, k_frac in 0.0f64..1.0) {
        let n = (n_frac * firms as f64) as usize;
        let k = 1 + (k_frac * firms as f64) as usize;
        let f = SampleFrame::new(firms, n, k.min(firms)).unwrap();
        let total: f64 = (0..=f.searched()).map(|m| pmf(f, m).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(mode(f) <= f.searched().min(n));
    }
}
