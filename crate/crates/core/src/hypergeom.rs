//! Hypergeometric observation probabilities.
//!
//! A buyer who samples `k` of `N` firms without replacement, when `n` of them
//! are active sellers, observes `m` prices with probability
//! `C(N-n, k-m) C(n, m) / C(N, k)`.

use crate::error::{ModelError, Result};
use crate::poly::Poly;

/// Largest firm count for which binomials stay exact in 128-bit integers.
pub const MAX_FIRMS: usize = 64;

/// Index triple for the observation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleFrame {
    firms: usize,
    active: usize,
    searched: usize,
}

impl SampleFrame {
    pub fn new(firms: usize, active: usize, searched: usize) -> Result<Self> {
        if !(3..=MAX_FIRMS).contains(&firms) {
            return Err(ModelError::Domain(format!(
                "firm count {firms} outside 3..={MAX_FIRMS}"
            )));
        }
        if active > firms {
            return Err(ModelError::Domain(format!(
                "active count {active} exceeds {firms}"
            )));
        }
        if searched == 0 || searched > firms {
            return Err(ModelError::Domain(format!(
                "search count {searched} outside 1..={firms}"
            )));
        }
        Ok(Self {
            firms,
            active,
            searched,
        })
    }

    pub fn firms(&self) -> usize {
        self.firms
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn searched(&self) -> usize {
        self.searched
    }

    /// Same market, one more firm searched.
    pub fn widened(&self) -> Result<Self> {
        Self::new(self.firms, self.active, self.searched + 1)
    }
}

/// Exact binomial coefficient, zero when `b > a`.
pub fn binomial(a: usize, b: usize) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact numerator of `pmf`; the denominator is `C(N, k)`.
pub fn pmf_numerator(frame: SampleFrame, m: usize) -> u128 {
    if m > frame.searched {
        return 0;
    }
    binomial(frame.firms - frame.active, frame.searched - m) * binomial(frame.active, m)
}

pub fn pmf(frame: SampleFrame, m: usize) -> Result<f64> {
    if m > frame.searched {
        return Err(ModelError::Domain(format!(
            "observed count {m} exceeds search count {}",
            frame.searched
        )));
    }
    Ok(pmf_numerator(frame, m) as f64 / binomial(frame.firms, frame.searched) as f64)
}

/// Probabilities for `m = 0..=k`.
pub fn pmf_vec(frame: SampleFrame) -> Vec<f64> {
    let total = binomial(frame.firms, frame.searched) as f64;
    (0..=frame.searched)
        .map(|m| pmf_numerator(frame, m) as f64 / total)
        .collect()
}

/// Generating polynomial `sum_m pmf(m) x^m`.
pub fn generating_poly(frame: SampleFrame) -> Poly {
    Poly::new(pmf_vec(frame))
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("argument {x} outside [0, 1]")))
    }
}

pub fn gen(frame: SampleFrame, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(generating_poly(frame).eval(x))
}

pub fn gen_prime(frame: SampleFrame, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(generating_poly(frame).derivative().eval(x))
}

/// Smallest maximiser of `m -> pmf(m)`, from the closed-form peak location.
pub fn mode(frame: SampleFrame) -> usize {
    let num = (frame.searched + 1) * (frame.active + 1);
    let den = frame.firms + 2;
    if num.is_multiple_of(den) {
        // integer peak: pmf ties at num/den - 1 and num/den
        num / den - 1
    } else {
        num / den
    }
}

fn check_pair(firms: usize, active: usize, searched: usize) -> Result<(SampleFrame, SampleFrame)> {
    if searched == 0 || searched + 1 > firms {
        return Err(ModelError::Domain(format!(
            "search count {searched} must lie in 1..={}",
            firms.saturating_sub(1)
        )));
    }
    Ok((
        SampleFrame::new(firms, active, searched)?,
        SampleFrame::new(firms, active, searched + 1)?,
    ))
}

/// Exact sign-carrying numerator of the cumulative gap between `k` and
/// `k + 1` searches, over the common denominator `C(N,k) C(N,k+1)`.
pub fn dominance_gap_exact(
    firms: usize,
    active: usize,
    searched: usize,
    upto: usize,
) -> Result<(i128, i128)> {
    let (lo, hi) = check_pair(firms, active, searched)?;
    if upto > searched + 1 {
        return Err(ModelError::Domain(format!(
            "cumulative index {upto} exceeds {}",
            searched + 1
        )));
    }
    let den_lo = binomial(firms, searched) as i128;
    let den_hi = binomial(firms, searched + 1) as i128;
    let cum_lo: i128 = (0..=upto.min(searched))
        .map(|m| pmf_numerator(lo, m) as i128)
        .sum();
    let cum_hi: i128 = (0..=upto).map(|m| pmf_numerator(hi, m) as i128).sum();
    Ok((cum_lo * den_hi - cum_hi * den_lo, den_lo * den_hi))
}

/// `sum_{m<=l} pmf(k, m) - sum_{m<=l} pmf(k+1, m)`.
pub fn dominance_gap(firms: usize, active: usize, searched: usize, upto: usize) -> Result<f64> {
    let (num, den) = dominance_gap_exact(firms, active, searched, upto)?;
    Ok(num as f64 / den as f64)
}

/// `pmf(k,1) * gen'(k+1, x) - pmf(k+1,1) * gen'(k, x)`.
pub fn psi(firms: usize, active: usize, searched: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    if active < 2 {
        return Err(ModelError::Domain(format!(
            "active count {active} must be at least 2"
        )));
    }
    let (lo, hi) = check_pair(firms, active, searched)?;
    let lo_first = pmf(lo, 1)?;
    let hi_first = pmf(hi, 1)?;
    Ok(lo_first * gen_prime(hi, x)? - hi_first * gen_prime(lo, x)?)
}

/// Terminating series `2F1(-a, -b; c; x)` for nonnegative integers `a`, `b`.
fn terminating_2f1(a: usize, b: usize, c: i64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..a.min(b) {
        let j_f = j as f64;
        term *= (j_f - a as f64) * (j_f - b as f64) / ((c as f64 + j_f) * (j_f + 1.0)) * x;
        sum += term;
    }
    sum
}

/// Absolute gap between `gen` and its Gauss hypergeometric representation.
pub fn gauss_identity_residual(frame: SampleFrame, x: f64) -> Result<f64> {
    check_unit(x)?;
    let lower = frame.firms as i64 - frame.active as i64 - frame.searched as i64 + 1;
    if lower < 1 {
        return Err(ModelError::IdentityInapplicable(lower));
    }
    let scale = binomial(frame.firms - frame.active, frame.searched) as f64
        / binomial(frame.firms, frame.searched) as f64;
    let series = scale * terminating_2f1(frame.active, frame.searched, lower, x);
    Ok((gen(frame, x)? - series).abs())
}
