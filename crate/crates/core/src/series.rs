//! Truncated power series with exact rational coefficients.
//!
//! A `TruncatedSeries` holds coefficients a_0..a_N of a formal series
//! sum a_n z^n whose tail beyond N exists but is not stored. Operations only
//! produce coefficients they can compute exactly from the stored prefix, so
//! results never silently depend on unknown tail terms.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{rat_int, Rat};

/// Exact prefix of a formal power series with non-negative coefficients.
///
/// Non-negativity is the toolkit's scope (every analytic bound here relies on
/// it), so it is enforced at construction. Signed sequences that arise from
/// differencing are handled as plain `Rat` slices by their own modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<Rat>,
}

impl TruncatedSeries {
    /// Wraps coefficients a_0..a_N. Panics if the vector is empty or any
    /// coefficient is negative; callers that ingest external data validate
    /// before constructing.
    pub fn new(coeffs: Vec<Rat>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a_0");
        if let Some(i) = coeffs.iter().position(|c| c.is_negative()) {
            panic!("negative coefficient at index {i}");
        }
        TruncatedSeries { coeffs }
    }

    /// Convenience constructor from machine integers.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    /// The series 1 truncated at order n.
    pub fn one(n: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[0] = Rat::one();
        TruncatedSeries { coeffs }
    }

    /// The series with every coefficient equal to c (c/(1-z) as a function).
    pub fn constant(c: &Rat, n: usize) -> Self {
        assert!(!c.is_negative(), "negative coefficient");
        TruncatedSeries {
            coeffs: vec![c.clone(); n + 1],
        }
    }

    /// The all-ones series 1/(1-z) truncated at order n.
    pub fn ones(n: usize) -> Self {
        Self::constant(&Rat::one(), n)
    }

    /// Truncation order N (the largest stored index).
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient a_n. Panics when n exceeds the truncation order: the tail
    /// is unknown, not zero, and pretending otherwise corrupts results.
    pub fn coeff(&self, n: usize) -> &Rat {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Shortens the stored prefix to order n.
    pub fn truncate(&self, n: usize) -> Self {
        assert!(n <= self.truncation_order(), "cannot extend a truncation");
        TruncatedSeries {
            coeffs: self.coeffs[..=n].to_vec(),
        }
    }

    /// Number of leading zero coefficients.
    pub fn leading_zeros(&self) -> usize {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len())
    }

    /// True when every stored coefficient is at least 1.
    pub fn is_one_lower_bounded(&self) -> bool {
        let one = Rat::one();
        self.coeffs.iter().all(|c| *c >= one)
    }
}

/// Exact product truncated at order n.
///
/// Requires n <= min of the factor truncation orders: the coefficient of z^m
/// in the product draws on a_0..a_m and b_0..b_m, and tails beyond a factor's
/// truncation are unknown rather than zero.
pub fn series_mul(a: &TruncatedSeries, b: &TruncatedSeries, n: usize) -> TruncatedSeries {
    assert!(
        n <= a.truncation_order() && n <= b.truncation_order(),
        "product order {n} exceeds a factor's truncation ({}, {})",
        a.truncation_order(),
        b.truncation_order()
    );
    let mut coeffs = vec![Rat::zero(); n + 1];
    for (m, cm) in coeffs.iter_mut().enumerate() {
        let mut acc = Rat::zero();
        for i in 0..=m {
            let (ai, bj) = (a.coeff(i), b.coeff(m - i));
            if !ai.is_zero() && !bj.is_zero() {
                acc += ai * bj;
            }
        }
        *cm = acc;
    }
    TruncatedSeries { coeffs }
}

/// Exact k-th power truncated at order n, by binary exponentiation with
/// truncation after every multiply. k = 0 yields the series 1.
pub fn series_pow(f: &TruncatedSeries, k: u32, n: usize) -> TruncatedSeries {
    assert!(
        n <= f.truncation_order(),
        "power order {n} exceeds the base truncation {}",
        f.truncation_order()
    );
    let mut result = TruncatedSeries::one(n);
    let mut base = f.truncate(n);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = series_mul(&result, &base, n);
        }
        e >>= 1;
        if e > 0 {
            base = series_mul(&base, &base, n);
        }
    }
    result
}

/// Exact i-th derivative as a series, truncated at order N - i.
///
/// Orders above 3 are rejected: every bound this toolkit certifies uses at
/// most the third derivative, and refusing higher orders keeps misuse loud.
pub fn derivative(f: &TruncatedSeries, i: u32) -> Result<TruncatedSeries> {
    if i > 3 {
        return Err(Error::Domain(format!(
            "derivative order {i} unsupported (certified bounds use orders 0..=3)"
        )));
    }
    let i = i as usize;
    if f.truncation_order() < i {
        return Err(Error::Domain(format!(
            "derivative order {i} exceeds truncation order {}",
            f.truncation_order()
        )));
    }
    let n_out = f.truncation_order() - i;
    let mut coeffs = Vec::with_capacity(n_out + 1);
    for m in 0..=n_out {
        // Coefficient of z^m in f^(i) is (m+i)!/m! * a_{m+i}.
        let mut factor = Rat::one();
        for t in m + 1..=m + i {
            factor *= rat_int(t as i64);
        }
        coeffs.push(factor * f.coeff(m + i));
    }
    Ok(TruncatedSeries { coeffs })
}

/// Exact product with 1/(1-z): partial sums of the coefficients. The
/// geometric factor is known to all orders, so the truncation is preserved.
pub fn prefix_sums(f: &TruncatedSeries) -> TruncatedSeries {
    let mut coeffs = Vec::with_capacity(f.coeffs.len());
    let mut acc = Rat::zero();
    for c in &f.coeffs {
        acc += c;
        coeffs.push(acc.clone());
    }
    TruncatedSeries { coeffs }
}

/// Exact product with z^j: shifts coefficients up, extending the truncation
/// order by j (the new low-order coefficients are exactly zero).
pub fn shift_up(f: &TruncatedSeries, j: usize) -> TruncatedSeries {
    let mut coeffs = vec![Rat::zero(); f.coeffs.len() + j];
    coeffs[j..].clone_from_slice(&f.coeffs);
    TruncatedSeries { coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    /// First divisor sums sigma_1(n)/n shifted by one: a_n = sigma_1(n+1)/(n+1).
    fn sigma_shifted_5() -> TruncatedSeries {
        TruncatedSeries::new(vec![
            rat_int(1),
            rat(3, 2),
            rat(4, 3),
            rat(7, 4),
            rat(6, 5),
            rat(2, 1),
        ])
    }

    #[test]
    #[should_panic(expected = "negative coefficient")]
    fn negative_coefficients_rejected() {
        TruncatedSeries::new(vec![rat_int(1), rat(-1, 2)]);
    }

    #[test]
    fn square_of_divisor_series_matches_hand_expansion() {
        // (1 + 3/2 z + 4/3 z^2 + ...)^2: the z^2 coefficient is
        // 2*(4/3) + (3/2)^2 = 8/3 + 9/4 = 59/12.
        let g = sigma_shifted_5();
        let g2 = series_mul(&g, &g, 4);
        assert_eq!(g2.coeff(0), &rat_int(1));
        assert_eq!(g2.coeff(1), &rat_int(3));
        assert_eq!(g2.coeff(2), &rat(59, 12));
        assert_eq!(series_pow(&g, 2, 4), g2);
    }

    #[test]
    fn geometric_powers_are_binomial_rows() {
        let ones = TruncatedSeries::ones(2);
        assert_eq!(series_pow(&ones, 2, 2), TruncatedSeries::from_ints(&[1, 2, 3]));
        assert_eq!(series_pow(&ones, 3, 2), TruncatedSeries::from_ints(&[1, 3, 6]));
    }

    #[test]
    fn zeroth_power_is_one() {
        let g = sigma_shifted_5();
        assert_eq!(series_pow(&g, 0, 3), TruncatedSeries::one(3));
        assert_eq!(series_pow(&g, 1, 3), g.truncate(3));
    }

    #[test]
    fn derivative_of_divisor_series() {
        // f' coefficients are (n+1) a_{n+1}: 3/2, 8/3, 21/4, 24/5, ...
        let f = sigma_shifted_5().truncate(4);
        let d = derivative(&f, 1).unwrap();
        assert_eq!(
            d.coeffs(),
            &[rat(3, 2), rat(8, 3), rat(21, 4), rat(24, 5)]
        );
        // Second derivative coefficients are (n+2)(n+1) a_{n+2}.
        let d2 = derivative(&f, 2).unwrap();
        assert_eq!(d2.coeffs(), &[rat(8, 3), rat(21, 2), rat(72, 5)]);
        assert_eq!(derivative(&d, 1).unwrap(), d2);
    }

    #[test]
    fn derivative_rejects_high_orders() {
        let f = TruncatedSeries::ones(10);
        assert!(derivative(&f, 4).is_err());
        assert!(derivative(&TruncatedSeries::one(0), 1).is_err());
    }

    #[test]
    fn derivative_order_three_of_geometric() {
        // (1/(1-z))''' = 6/(1-z)^4, whose coefficients are (n+1)(n+2)(n+3).
        let f = TruncatedSeries::ones(10);
        let d3 = derivative(&f, 3).unwrap();
        for m in 0..=7usize {
            let expect = ((m + 1) * (m + 2) * (m + 3)) as i64;
            assert_eq!(d3.coeff(m), &rat_int(expect), "m={m}");
        }
    }

    #[test]
    fn prefix_sums_match_geometric_multiplication() {
        let g = sigma_shifted_5();
        let via_cumsum = prefix_sums(&g);
        let via_mul = series_mul(&g, &TruncatedSeries::ones(5), 5);
        assert_eq!(via_cumsum, via_mul);
        assert_eq!(via_cumsum.coeff(2), &rat(23, 6)); // 1 + 3/2 + 4/3
    }

    #[test]
    fn shift_preserves_values() {
        let g = sigma_shifted_5();
        let shifted = shift_up(&g, 2);
        assert_eq!(shifted.truncation_order(), 7);
        assert_eq!(shifted.coeff(0), &Rat::zero());
        assert_eq!(shifted.coeff(1), &Rat::zero());
        assert_eq!(shifted.coeff(2), &rat_int(1));
        assert_eq!(shifted.coeff(7), &rat(2, 1));
        assert_eq!(shifted.leading_zeros(), 2);
    }

    #[test]
    fn one_lower_bound_detection() {
        assert!(sigma_shifted_5().is_one_lower_bounded());
        assert!(!TruncatedSeries::one(3).is_one_lower_bounded());
        assert!(TruncatedSeries::ones(3).is_one_lower_bounded());
    }
}
