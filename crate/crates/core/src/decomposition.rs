//! The tuple-class decomposition of coefficients of f^k, its exact
//! difference identities, and measurement of every residual family against
//! its envelope.
//!
//! For a series f with all a_n >= 1, each factor splits as
//! a_n = a^(0)_n + a^(1)_n with a^(0)_n = 1 and a^(1)_n = a_n - 1 >= 0.
//! Expanding f^k over the 2^k choices gives, for a tuple I in {0,1}^k,
//!
//!   a^I_n = sum over x_1 + ... + x_k = n of a^(i_1)_{x_1} ... a^(i_k)_{x_k},
//!
//! and a_{n,k} = sum over I of a^I_n. The value depends on I only through
//! the zero count k0 and one count k1: every factor choice is a convolution
//! and convolution commutes. That collapses the 2^k tuples to k + 1 classes,
//! each computed as (excess part)^{k1} multiplied by the all-ones series k0
//! times, i.e. k0 rounds of prefix sums. All of this is exact rational
//! arithmetic; directed rounding enters only when an envelope with an
//! irrational exponent is evaluated, and then the envelope is rounded down
//! so a reported pass is never optimistic.

use num_traits::{One, Pow, Signed, Zero};
use rug::ops::Pow as RugPow;
use rug::Integer as RugInteger;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hiprec::Enclosure;
use crate::rat::{binomial, factorial, int_to_rug, rug_to_int, Int, Rat};
use crate::sequences::{rat_f64, GrowthCertificate};
use crate::series::{prefix_sums, series_pow, TruncatedSeries};
use crate::table::{IntRow, PowerTable};

/// Working precision for envelope enclosures. The quantities are powers and
/// exponentials of small integers; 128 bits leaves dozens of guard digits
/// beyond the f64 fields the records keep.
const ENVELOPE_PREC: u32 = 128;

/// A 1-lower-bounded series split into its constant part and its excess.
///
/// `zeros_part` is the all-ones series (the factor selected by a 0 in a
/// tuple), `ones_part` has entries a_n - 1 (the factor selected by a 1).
/// The two parts sum back to the source entrywise.
#[derive(Debug, Clone)]
pub struct SplitSeries {
    ones_part: TruncatedSeries,
}

impl SplitSeries {
    /// Splits a series. The split is only meaningful for 1-lower-bounded
    /// input; anything else is a `Domain` error, because a^(1) entries
    /// would go negative and every sign argument below would be void.
    pub fn new(f: &TruncatedSeries) -> Result<Self> {
        if !f.is_one_lower_bounded() {
            return Err(Error::Domain(
                "tuple-class decomposition needs a 1-lower-bounded series".into(),
            ));
        }
        let one = Rat::one();
        let ones_part = TruncatedSeries::new(f.coeffs().iter().map(|a| a - &one).collect());
        Ok(SplitSeries { ones_part })
    }

    pub fn truncation_order(&self) -> usize {
        self.ones_part.truncation_order()
    }

    /// The excess series a^(1)_n = a_n - 1 (entries >= 0).
    pub fn ones_part(&self) -> &TruncatedSeries {
        &self.ones_part
    }

    /// The constant series a^(0)_n = 1.
    pub fn zeros_part(&self) -> TruncatedSeries {
        TruncatedSeries::ones(self.truncation_order())
    }

    /// zeros_part + ones_part, entrywise; equals the source by construction.
    pub fn recombined(&self) -> TruncatedSeries {
        let one = Rat::one();
        TruncatedSeries::new(self.ones_part.coeffs().iter().map(|a| a + &one).collect())
    }
}

/// The full class series a^{(k0,k1)} as a truncated series: coefficient n
/// is a^I_n for any tuple I with k0 zeros and k1 ones.
///
/// Computed as (ones_part)^{k1} followed by k0 rounds of prefix sums
/// (multiplying by the all-ones series once per zero). For k1 = 0 this
/// yields the closed form binomial(n + k0 - 1, k0 - 1) automatically.
/// Requires k0 + k1 >= 1; the empty class is a boundary convention handled
/// where it arises (see `second_diff_identity`).
pub fn a_i_series(split: &SplitSeries, k0: u32, k1: u32) -> Result<TruncatedSeries> {
    if k0 + k1 == 0 {
        return Err(Error::Domain("tuple class needs k0 + k1 >= 1".into()));
    }
    let n = split.truncation_order();
    let mut acc = if k1 == 0 {
        TruncatedSeries::one(n)
    } else {
        series_pow(&split.ones_part, k1, n)
    };
    for _ in 0..k0 {
        acc = prefix_sums(&acc);
    }
    Ok(acc)
}

/// One coefficient a^I_n of the class (k0, k1). Errors: `Domain` for the
/// empty class, `Precision` when n exceeds the split's truncation (the
/// error carries the truncation that would be needed).
pub fn a_i(split: &SplitSeries, k0: u32, k1: u32, n: usize) -> Result<Rat> {
    if n > split.truncation_order() {
        return Err(Error::Precision {
            what: format!(
                "tuple-class coefficient at n={n} exceeds series truncation {}",
                split.truncation_order()
            ),
            required_n: n,
        });
    }
    Ok(a_i_series(split, k0, k1)?.coeff(n).clone())
}

/// Direct enumeration of a^I_n over all compositions x_1 + ... + x_k = n,
/// as a small-scale oracle for `a_i` and for the permutation invariance of
/// tuple classes. The term count is binomial(n + k - 1, k - 1); anything
/// past 2 * 10^7 terms is refused with a resource error, which keeps the
/// oracle at the k <= 5 scale it exists for.
pub fn a_i_bruteforce(split: &SplitSeries, tuple: &[u8], n: usize) -> Result<Rat> {
    if tuple.is_empty() || tuple.iter().any(|&b| b > 1) {
        return Err(Error::Domain(
            "tuple must be non-empty with entries in {0, 1}".into(),
        ));
    }
    if n > split.truncation_order() {
        return Err(Error::Precision {
            what: format!(
                "tuple-class coefficient at n={n} exceeds series truncation {}",
                split.truncation_order()
            ),
            required_n: n,
        });
    }
    let k = tuple.len();
    let terms = binomial((n + k - 1) as u64, (k - 1) as u64);
    if terms > Int::from(20_000_000u64) {
        return Err(Error::Resource {
            what: "brute-force tuple enumeration".into(),
            k,
            n,
            estimate_mib: 1024,
            budget_mib: 512,
        });
    }
    fn go(ones: &TruncatedSeries, tuple: &[u8], pos: usize, remaining: usize) -> Rat {
        let part = |x: usize| -> Rat {
            if tuple[pos] == 0 {
                Rat::one()
            } else {
                ones.coeff(x).clone()
            }
        };
        if pos + 1 == tuple.len() {
            return part(remaining);
        }
        let mut sum = Rat::zero();
        for x in 0..=remaining {
            let factor = part(x);
            if factor.is_zero() {
                continue;
            }
            sum += factor * go(ones, tuple, pos + 1, remaining - x);
        }
        sum
    }
    Ok(go(&split.ones_part, tuple, 0, n))
}

/// Outcome of one exact identity check. `what` carries the instance
/// parameters; a false `holds` means an arithmetic inconsistency between
/// two independent computations, never a tolerance question.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub what: String,
    pub holds: bool,
    #[serde(serialize_with = "crate::rat::serde_rat::serialize")]
    pub lhs: Rat,
    #[serde(serialize_with = "crate::rat::serde_rat::serialize")]
    pub rhs: Rat,
}

/// Verifies a_{n,k} = sum over k1 of binomial(k, k1) a^{(k-k1,k1)}_n
/// exactly, with the left side built from the split (class series, one per
/// k1) and the right side taken from the power table's convolution chain.
/// The two sides share no code path past the base series.
pub fn partition_sum_identity(
    table: &PowerTable,
    split: &SplitSeries,
    k: u32,
    n: usize,
) -> Result<IdentityCheck> {
    let checks = partition_sum_identity_range(table, split, k, n)?;
    Ok(checks.into_iter().last().expect("range includes n"))
}

/// `partition_sum_identity` for every n <= n_max at once; builds the k + 1
/// class series a single time instead of once per index.
pub fn partition_sum_identity_range(
    table: &PowerTable,
    split: &SplitSeries,
    k: u32,
    n_max: usize,
) -> Result<Vec<IdentityCheck>> {
    if k == 0 || k > table.k_max() {
        return Err(Error::Domain(format!(
            "partition-sum identity needs 1 <= k <= {}, got {k}",
            table.k_max()
        )));
    }
    if n_max > table.n() || n_max > split.truncation_order() {
        return Err(Error::Precision {
            what: format!("partition-sum identity at n={n_max} exceeds a truncation"),
            required_n: n_max,
        });
    }
    if table.row(k).is_none() {
        return Err(Error::Domain(format!("row {k} was dropped at build time")));
    }
    let classes: Vec<TruncatedSeries> = (0..=k)
        .map(|k1| a_i_series(split, k - k1, k1))
        .collect::<Result<_>>()?;
    let weights: Vec<Rat> = (0..=k)
        .map(|k1| Rat::from_integer(binomial(u64::from(k), u64::from(k1))))
        .collect();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut lhs = Rat::zero();
        for (cls, w) in classes.iter().zip(&weights) {
            lhs += w * cls.coeff(n);
        }
        let rhs = table.coeff(k, n);
        out.push(IdentityCheck {
            what: format!("partition-sum k={k} n={n}"),
            holds: lhs == rhs,
            lhs,
            rhs,
        });
    }
    Ok(out)
}

fn class_coeff_or_zero(cls: &TruncatedSeries, n: i64) -> Rat {
    if n < 0 {
        Rat::zero()
    } else {
        cls.coeff(n as usize).clone()
    }
}

/// Verifies the second-difference collapse
/// a^I_{n+1} - 2 a^I_n + a^I_{n-1} = a^{I'}_{n+1}, where I' drops two zeros
/// from I. Valid for any n >= -1 with out-of-range coefficients read as 0.
///
/// Boundary conventions: removing both zeros from the class (2, 0) leaves
/// the empty class, whose only composition is n = 0 with the empty product
/// 1, so its series is 1, 0, 0, ... The identity is unconditional algebra
/// (the three shifted copies of the double prefix sum cancel), so a false
/// `holds` can only mean an arithmetic bug.
pub fn second_diff_identity(
    split: &SplitSeries,
    k0: u32,
    k1: u32,
    n: i64,
) -> Result<IdentityCheck> {
    let checks = second_diff_identity_range(split, k0, k1, n)?;
    Ok(checks.into_iter().last().expect("range includes n"))
}

/// `second_diff_identity` for every index from -1 to n_max at once.
pub fn second_diff_identity_range(
    split: &SplitSeries,
    k0: u32,
    k1: u32,
    n_max: i64,
) -> Result<Vec<IdentityCheck>> {
    if k0 < 2 {
        return Err(Error::Domain(format!(
            "second-difference collapse needs k0 >= 2, got {k0}"
        )));
    }
    if n_max < -1 {
        return Err(Error::Domain(format!(
            "second-difference index range starts at -1, got {n_max}"
        )));
    }
    if n_max + 1 > split.truncation_order() as i64 {
        return Err(Error::Precision {
            what: format!("second-difference identity reads index {}", n_max + 1),
            required_n: (n_max + 1) as usize,
        });
    }
    let cls = a_i_series(split, k0, k1)?;
    let dropped = if k0 - 2 + k1 == 0 {
        TruncatedSeries::one(split.truncation_order())
    } else {
        a_i_series(split, k0 - 2, k1)?
    };
    let mut out = Vec::new();
    for n in -1..=n_max {
        let lhs = class_coeff_or_zero(&cls, n + 1)
            - class_coeff_or_zero(&cls, n) * Rat::from_integer(Int::from(2))
            + class_coeff_or_zero(&cls, n - 1);
        let rhs = class_coeff_or_zero(&dropped, n + 1);
        out.push(IdentityCheck {
            what: format!("second-difference k0={k0} k1={k1} n={n}"),
            holds: lhs == rhs,
            lhs,
            rhs,
        });
    }
    Ok(out)
}

/// The residual families this module measures. Names follow the shape of
/// the main term, not any numbering scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualFamily {
    /// R in a^{(1...1,0)}_n = binom(n+k-1, k-1) (C-1)^{k-1} (1 - R).
    OneZero,
    /// S in a^I_n = binom(n+k-1, k-1) (C-1)^{k1} (1 - S), any k0 >= 1.
    AtLeastOneZero,
    /// R in second difference of a_{n,k} = C^k (n+k)^{k-3}/(k-3)! (1 + R).
    SecondDifference,
    /// R in first difference of a_{n,k} = C^k (n+k)^{k-2}/(k-2)! (1 + R).
    FirstDifference,
    /// R in a_{n-1,k} = C^k (n+k)^{k-1}/(k-1)! (1 + R).
    ZerothDifference,
}

impl ResidualFamily {
    pub fn name(self) -> &'static str {
        match self {
            ResidualFamily::OneZero => "one-zero",
            ResidualFamily::AtLeastOneZero => "at-least-one-zero",
            ResidualFamily::SecondDifference => "second-difference",
            ResidualFamily::FirstDifference => "first-difference",
            ResidualFamily::ZerothDifference => "zeroth-difference",
        }
    }
}

/// One measured residual. The residual itself is exact; the envelope shape
/// factor is carried as a certified [factor_lo, factor_hi] bracket demoted
/// to f64 with outward rounding, so later constant fits and pass checks
/// stay conservative. `envelope` and `pass` are filled once a constant is
/// applied: pass means |residual| <= constant * factor_lo, checked in exact
/// rational arithmetic (the f64 bound converts to a rational exactly).
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRecord {
    pub family: ResidualFamily,
    pub k0: u32,
    pub k1: u32,
    pub n: usize,
    #[serde(serialize_with = "crate::rat::serde_rat::serialize")]
    pub residual: Rat,
    pub factor_lo: f64,
    pub factor_hi: f64,
    pub envelope: Option<f64>,
    pub pass: Option<bool>,
}

impl ResidualRecord {
    /// Applies an envelope constant: sets `envelope` to constant*factor_lo
    /// and `pass` to the conservative exact comparison described above.
    pub fn apply_envelope(&mut self, constant: &Rat) {
        let factor = Rat::from_float(self.factor_lo)
            .expect("factor brackets are finite by construction");
        let bound = constant * factor;
        self.envelope = Some(rat_f64(&bound));
        self.pass = Some(self.residual.abs() <= bound);
    }
}

pub fn apply_envelope_all(records: &mut [ResidualRecord], constant: &Rat) {
    for r in records {
        r.apply_envelope(constant);
    }
}

/// The one-zero envelope constant the growth condition yields directly:
/// C1 = D / min(C - 1, 1). Requires C > 1 (with C = 1 the main term
/// carries the factor (C-1)^{k-1} = 0 and the normalized residual is
/// undefined).
pub fn one_zero_constant(cert: &GrowthCertificate) -> Result<Rat> {
    let excess = &cert.c - Rat::one();
    if excess <= Rat::zero() {
        return Err(Error::Domain(
            "one-zero residuals need C > 1 (the main term vanishes at C = 1)".into(),
        ));
    }
    let denom = if excess < Rat::one() { excess } else { Rat::one() };
    Ok(&cert.d / denom)
}

/// Envelope shape factor k(k-1)/(n+k-1)^{1-alpha} for the one-zero and
/// at-least-one-zero families, as a certified bracket.
fn factor_one_zero(k: u32, n: usize, alpha: &Rat) -> Enclosure {
    let base = Enclosure::from_int(
        ENVELOPE_PREC,
        &RugInteger::from(n as u64 + u64::from(k) - 1),
    );
    let exponent = Rat::one() - alpha;
    let numer = Enclosure::from_int(
        ENVELOPE_PREC,
        &RugInteger::from(u64::from(k) * u64::from(k - 1)),
    );
    numer.div(&base.pow_rat(&exponent))
}

/// Envelope shape factor for the difference families:
/// k^2/(n+k)^{1-alpha} + (n+k)^{2+alpha} A^{-(2+alpha)k}. When the
/// certificate has C = 1 there is no finite growth base; the base term is
/// then absent (it vanishes in the limit C down to 1, where A diverges).
fn factor_differences(cert: &GrowthCertificate, k: u32, n: usize) -> Enclosure {
    let nk = Enclosure::from_int(ENVELOPE_PREC, &RugInteger::from(n as u64 + u64::from(k)));
    let one_minus_alpha = Rat::one() - &cert.alpha;
    let k2 = Enclosure::from_int(
        ENVELOPE_PREC,
        &RugInteger::from(u64::from(k) * u64::from(k)),
    );
    let term1 = k2.div(&nk.pow_rat(&one_minus_alpha));
    match &cert.growth_base {
        None => term1,
        Some(a) => {
            let two_plus_alpha = Rat::from_integer(Int::from(2)) + &cert.alpha;
            let neg_exp = -(&two_plus_alpha * Rat::from_integer(Int::from(i64::from(k))));
            let term2 = nk.pow_rat(&two_plus_alpha).mul(&a.pow_rat(&neg_exp));
            term1.add(&term2)
        }
    }
}

fn factor_to_f64(enc: &Enclosure) -> (f64, f64) {
    (
        enc.lo.to_f64_round(rug::float::Round::Down),
        enc.hi.to_f64_round(rug::float::Round::Up),
    )
}

fn make_record(
    family: ResidualFamily,
    k0: u32,
    k1: u32,
    n: usize,
    residual: Rat,
    factor: &Enclosure,
) -> ResidualRecord {
    let (factor_lo, factor_hi) = factor_to_f64(factor);
    ResidualRecord {
        family,
        k0,
        k1,
        n,
        residual,
        factor_lo,
        factor_hi,
        envelope: None,
        pass: None,
    }
}

/// Measures R in a^{(1,...,1,0)}_n = binom(n+k-1,k-1) (C-1)^{k-1} (1 - R)
/// exactly and checks it against the envelope C1 k(k-1)/(n+k-1)^{1-alpha}
/// with C1 = D/min(C-1, 1). The growth condition implies 0 <= R; a
/// negative residual is a reportable finding, not an error.
pub fn residual_one_zero(
    split: &SplitSeries,
    cert: &GrowthCertificate,
    k: u32,
    n: usize,
) -> Result<ResidualRecord> {
    if k < 2 {
        return Err(Error::Domain(format!("one-zero residual needs k >= 2, got {k}")));
    }
    let c1 = one_zero_constant(cert)?;
    let value = a_i(split, 1, k - 1, n)?;
    let excess = &cert.c - Rat::one();
    let main = Rat::from_integer(binomial((n + k as usize - 1) as u64, u64::from(k) - 1))
        * excess.pow((k - 1) as i32);
    let residual = Rat::one() - value / main;
    let factor = factor_one_zero(k, n, &cert.alpha);
    let mut rec = make_record(ResidualFamily::OneZero, 1, k - 1, n, residual, &factor);
    rec.apply_envelope(&c1);
    Ok(rec)
}

/// Measures S in a^I_n = binom(n+k-1,k-1) (C-1)^{k1} (1 - S) for a class
/// with k0 >= 1 zeros, against the same envelope as the one-zero family.
/// For k1 = 0 the residual is identically 0 (the class is pure binomial).
pub fn residual_at_least_one_zero(
    split: &SplitSeries,
    cert: &GrowthCertificate,
    k0: u32,
    k1: u32,
    n: usize,
) -> Result<ResidualRecord> {
    if k0 < 1 {
        return Err(Error::Domain(format!(
            "at-least-one-zero residual needs k0 >= 1, got {k0}"
        )));
    }
    let k = k0 + k1;
    if k < 2 {
        return Err(Error::Domain(format!(
            "at-least-one-zero residual needs k0 + k1 >= 2, got {k}"
        )));
    }
    let excess = &cert.c - Rat::one();
    if k1 >= 1 && excess <= Rat::zero() {
        return Err(Error::Domain(
            "at-least-one-zero residuals with ones need C > 1".into(),
        ));
    }
    let c1 = one_zero_constant(cert).unwrap_or_else(|_| Rat::zero());
    let value = a_i(split, k0, k1, n)?;
    let main = Rat::from_integer(binomial((n + k as usize - 1) as u64, u64::from(k) - 1))
        * excess.pow(k1 as i32);
    let residual = Rat::one() - value / main;
    let factor = factor_one_zero(k, n, &cert.alpha);
    let mut rec = make_record(ResidualFamily::AtLeastOneZero, k0, k1, n, residual, &factor);
    rec.apply_envelope(&c1);
    Ok(rec)
}

/// Measures the three difference residuals of a full row at index n:
///
///   second difference of a_{.,k} = C^k (n+k)^{k-3}/(k-3)! (1 + R2)
///   first  difference            = C^k (n+k)^{k-2}/(k-2)! (1 + R1)
///   a_{n-1,k}                    = C^k (n+k)^{k-1}/(k-1)! (1 + R0)
///
/// exactly, each carrying the two-term envelope factor
/// k^2/(n+k)^{1-alpha} + (n+k)^{2+alpha} A^{-(2+alpha)k}. The constant in
/// front is existential, so records come back unchecked; fit a constant
/// over a record population and apply it separately. Requires k >= 3 and
/// 1 <= n <= N-1.
pub fn residual_differences(
    table: &PowerTable,
    cert: &GrowthCertificate,
    k: u32,
    n: usize,
) -> Result<[ResidualRecord; 3]> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "difference residuals need k >= 3, got {k}"
        )));
    }
    if n < 1 || n + 1 > table.n() {
        return Err(Error::Domain(format!(
            "difference residuals need 1 <= n <= {}, got {n}",
            table.n() - 1
        )));
    }
    let row = table
        .row(k)
        .ok_or_else(|| Error::Domain(format!("row {k} was dropped at build time")))?;
    let prev = row.coeff_rat(n - 1);
    let cur = row.coeff_rat(n);
    let next = row.coeff_rat(n + 1);
    let factor = factor_differences(cert, k, n);
    Ok(diff_records_from_coeffs(cert, k, n, &prev, &cur, &next, &factor))
}

fn diff_records_from_coeffs(
    cert: &GrowthCertificate,
    k: u32,
    n: usize,
    prev: &Rat,
    cur: &Rat,
    next: &Rat,
    factor: &Enclosure,
) -> [ResidualRecord; 3] {
    let ck = cert.c.clone().pow(k as i32);
    let nk = Int::from((n + k as usize) as u64);
    let main = |power: u32| -> Rat {
        &ck * Rat::new(nk.clone().pow(power), factorial(u64::from(power)))
    };
    let second = next - cur - cur + prev;
    let first = cur - prev;
    let r2 = second / main(k - 3) - Rat::one();
    let r1 = first / main(k - 2) - Rat::one();
    let r0 = prev / main(k - 1) - Rat::one();
    [
        make_record(ResidualFamily::SecondDifference, 0, k, n, r2, factor),
        make_record(ResidualFamily::FirstDifference, 0, k, n, r1, factor),
        make_record(ResidualFamily::ZerothDifference, 0, k, n, r0, factor),
    ]
}

/// Result of the exhaustive one-zero sign scan over a power-table row of
/// the excess series: the first index with R < 0 if any, plus exact
/// records at the sampled indices.
#[derive(Debug, Clone, Serialize)]
pub struct OneZeroScan {
    pub k: u32,
    pub checked_up_to: usize,
    pub negative_at: Option<usize>,
    pub records: Vec<ResidualRecord>,
}

/// Scans R over ALL n up to the row truncation using integer
/// cross-multiplication (no reduction, no rounding), and materializes
/// exact records at `sample_at`. `excess_row` must be row k-1 of a power
/// table built from the split's ones part; the row's common denominator
/// makes a^I_n = P_n / den with P the numerator prefix sums, so
///
///   R >= 0  iff  P_n q^{k-1} <= binom(n+k-1, k-1) p^{k-1} den
///
/// with C - 1 = p/q reduced. One big-by-small product per side per index.
pub fn scan_one_zero(
    excess_row: &IntRow,
    cert: &GrowthCertificate,
    k: u32,
    sample_at: &[usize],
) -> Result<OneZeroScan> {
    if k < 2 {
        return Err(Error::Domain(format!("one-zero residual needs k >= 2, got {k}")));
    }
    let c1 = one_zero_constant(cert)?;
    let excess = &cert.c - Rat::one();
    let k1 = k - 1;
    let p_pow = int_to_rug(excess.numer()).pow(k1);
    let q_pow = int_to_rug(excess.denom()).pow(k1);
    let n_last = excess_row.num.len() - 1;

    let mut prefix = RugInteger::new();
    let mut binom = RugInteger::from(1);
    let mut negative_at = None;
    let mut records = Vec::new();
    let mut sorted_samples: Vec<usize> = sample_at.iter().copied().filter(|&s| s <= n_last).collect();
    sorted_samples.sort_unstable();
    sorted_samples.dedup();
    let mut next_sample = 0usize;

    for n in 0..=n_last {
        prefix += &excess_row.num[n];
        if n > 0 {
            // binom(n+k-1, k-1) from binom(n-1+k-1, k-1): multiply by
            // (n+k-1), divide exactly by n.
            binom *= n as u64 + u64::from(k) - 1;
            binom = binom.div_exact_u(n as u32);
        }
        if negative_at.is_none() {
            let lhs = RugInteger::from(&prefix * &q_pow);
            let rhs_small = RugInteger::from(&binom * &p_pow);
            let rhs = RugInteger::from(&rhs_small * &excess_row.den);
            if lhs > rhs {
                negative_at = Some(n);
            }
        }
        if next_sample < sorted_samples.len() && sorted_samples[next_sample] == n {
            next_sample += 1;
            let value = Rat::new(
                rug_to_int(&prefix),
                rug_to_int(&excess_row.den),
            );
            let main = Rat::from_integer(rug_to_int(&binom)) * excess.clone().pow(k1 as i32);
            let residual = Rat::one() - value / main;
            let factor = factor_one_zero(k, n, &cert.alpha);
            let mut rec = make_record(ResidualFamily::OneZero, 1, k1, n, residual, &factor);
            rec.apply_envelope(&c1);
            records.push(rec);
        }
    }
    Ok(OneZeroScan {
        k,
        checked_up_to: n_last,
        negative_at,
        records,
    })
}

/// Difference residual records at the sampled indices of a full row,
/// computed straight from the row numerators (one rational reduction per
/// sample, not per index).
pub fn scan_differences(
    row: &IntRow,
    cert: &GrowthCertificate,
    k: u32,
    sample_at: &[usize],
) -> Result<Vec<ResidualRecord>> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "difference residuals need k >= 3, got {k}"
        )));
    }
    let n_last = row.num.len() - 1;
    let mut samples: Vec<usize> = sample_at
        .iter()
        .copied()
        .filter(|&n| n >= 1 && n < n_last)
        .collect();
    samples.sort_unstable();
    samples.dedup();
    let mut out = Vec::with_capacity(3 * samples.len());
    for n in samples {
        let prev = row.coeff_rat(n - 1);
        let cur = row.coeff_rat(n);
        let next = row.coeff_rat(n + 1);
        let factor = factor_differences(cert, k, n);
        out.extend(diff_records_from_coeffs(cert, k, n, &prev, &cur, &next, &factor));
    }
    Ok(out)
}

/// Smallest constant that puts every record inside its envelope, with the
/// record attaining it. The division uses each record's down-rounded
/// factor, so the fitted constant errs high (conservative).
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub constant: f64,
    pub argmax: Option<(u32, u32, usize)>,
    pub records: usize,
}

pub fn fit_constants(records: &[ResidualRecord]) -> Result<FitReport> {
    if records.is_empty() {
        return Err(Error::Domain("constant fit needs at least one record".into()));
    }
    let family = records[0].family;
    if records.iter().any(|r| r.family != family) {
        return Err(Error::Domain(
            "constant fit needs records from a single residual family".into(),
        ));
    }
    let mut best = Rat::zero();
    let mut argmax = None;
    for r in records {
        let factor = Rat::from_float(r.factor_lo).ok_or_else(|| {
            Error::Domain("record carries a non-finite envelope factor".into())
        })?;
        if factor <= Rat::zero() {
            return Err(Error::Domain(
                "record carries a non-positive envelope factor".into(),
            ));
        }
        let needed = r.residual.abs() / factor;
        if needed > best {
            best = needed;
            argmax = Some((r.k0, r.k1, r.n));
        }
    }
    Ok(FitReport {
        constant: rat_f64(&best),
        argmax,
        records: records.len(),
    })
}

/// Stability of the fitted constant under growing the n-range: fit on the
/// records with n <= split_n, fit on all records, and compare. A fit that
/// keeps growing as the range extends means the envelope shape does not
/// actually cover the residuals (the constant is absorbing growth the
/// exponent should carry), which is flagged.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub half: FitReport,
    pub full: FitReport,
    /// full constant / half constant; 1.0 when both are zero.
    pub growth: f64,
    pub flagged: bool,
}

pub fn fit_stability(
    records: &[ResidualRecord],
    split_n: usize,
    tolerance: f64,
) -> Result<StabilityReport> {
    let half_records: Vec<ResidualRecord> = records
        .iter()
        .filter(|r| r.n <= split_n)
        .cloned()
        .collect();
    if half_records.is_empty() {
        return Err(Error::Domain(format!(
            "no records at n <= {split_n}; stability split needs both halves"
        )));
    }
    let half = fit_constants(&half_records)?;
    let full = fit_constants(records)?;
    let growth = if full.constant == 0.0 && half.constant == 0.0 {
        1.0
    } else if half.constant == 0.0 {
        f64::INFINITY
    } else {
        full.constant / half.constant
    };
    Ok(StabilityReport {
        half,
        full,
        growth,
        flagged: growth > 1.0 + tolerance,
    })
}

/// The (k-dependent) index window on which the difference residuals are
/// expected to drop below 1/k^2: k^{5/(1-alpha)} <= n <= A^k / k^2.
/// `n_low` rounds up and saturates; `n_high` rounds down, with `None`
/// meaning unbounded (a C = 1 certificate has no finite base and the
/// base term of the envelope is absent).
#[derive(Debug, Clone, Serialize)]
pub struct ResidualWindow {
    pub k: u32,
    pub n_low: u64,
    pub n_high: Option<u64>,
}

pub fn residual_window(cert: &GrowthCertificate, k: u32) -> ResidualWindow {
    // 5/(1-alpha) as an exact rational exponent.
    let exponent = Rat::new(Int::from(5), Int::one()) / (Rat::one() - &cert.alpha);
    let n_low = if exponent.denom().is_one() {
        // Integer exponent: compute k^e exactly (saturating) instead of
        // through a transcendental enclosure, so boundaries like 3^5 = 243
        // do not get bumped to 244 by outward rounding.
        u32::try_from(exponent.numer().clone())
            .ok()
            .map_or(u64::MAX, |e| {
                u64::try_from(Int::from(u64::from(k)).pow(e)).unwrap_or(u64::MAX)
            })
    } else {
        let low_enc = Enclosure::from_int(ENVELOPE_PREC, &RugInteger::from(u64::from(k)))
            .pow_rat(&exponent);
        let low = low_enc.hi.to_f64_round(rug::float::Round::Up).ceil();
        if low.is_finite() && low < 9.0e18 {
            low as u64
        } else {
            u64::MAX
        }
    };
    let n_high = cert.growth_base.as_ref().map(|a| {
        let k_rat = Rat::from_integer(Int::from(i64::from(k)));
        let num = a.pow_rat(&k_rat);
        let den = Enclosure::from_int(
            ENVELOPE_PREC,
            &RugInteger::from(u64::from(k) * u64::from(k)),
        );
        let high = num.div(&den).lo.to_f64_round(rug::float::Round::Down).floor();
        if high.is_finite() && high < 9.0e18 {
            if high < 0.0 {
                0
            } else {
                high as u64
            }
        } else {
            u64::MAX
        }
    });
    ResidualWindow { k, n_low, n_high }
}

/// Checks |R^(i)| <= 1/k^2 at sampled indices inside the window
/// intersected with the table's interior range. An empty intersection is
/// reported, not asserted away: `usable` and `all_within` stay `None`.
#[derive(Debug, Clone, Serialize)]
pub struct WindowCheckReport {
    pub k: u32,
    pub window: ResidualWindow,
    pub usable: Option<(usize, usize)>,
    pub points: Vec<usize>,
    pub all_within: Option<bool>,
    /// Largest |R^(i)| seen over the sampled points, as a canonical "p/q"
    /// string; `None` when the window is empty.
    pub max_abs_residual: Option<String>,
}

pub fn window_check(
    table: &PowerTable,
    cert: &GrowthCertificate,
    k: u32,
    max_points: usize,
) -> Result<WindowCheckReport> {
    let window = residual_window(cert, k);
    let lo = window.n_low.max(1);
    let hi_table = (table.n() - 1) as u64;
    let hi = window.n_high.map_or(hi_table, |h| h.min(hi_table));
    if lo > hi {
        return Ok(WindowCheckReport {
            k,
            window,
            usable: None,
            points: Vec::new(),
            all_within: None,
            max_abs_residual: None,
        });
    }
    let points = sample_log_grid(lo as usize, hi as usize, max_points);
    let threshold = Rat::new(Int::one(), Int::from(u64::from(k) * u64::from(k)));
    let mut max_abs = Rat::zero();
    let mut all_within = true;
    for &n in &points {
        for rec in residual_differences(table, cert, k, n)? {
            let a = rec.residual.abs();
            if a > threshold {
                all_within = false;
            }
            if a > max_abs {
                max_abs = a;
            }
        }
    }
    Ok(WindowCheckReport {
        k,
        window,
        usable: Some((lo as usize, hi as usize)),
        points,
        all_within: Some(all_within),
        max_abs_residual: Some(crate::rat::format_rat(&max_abs)),
    })
}

/// Sorted, deduplicated sample grid: both ends plus geometrically spaced
/// interior points, at most `max_points` total. Scans use it so record
/// populations cover every scale of n without materializing every index.
pub fn sample_log_grid(lo: usize, hi: usize, max_points: usize) -> Vec<usize> {
    assert!(lo <= hi, "sample grid ends out of order");
    assert!(max_points >= 2, "sample grid needs at least both ends");
    if hi - lo < max_points {
        return (lo..=hi).collect();
    }
    let mut pts = vec![lo, hi];
    let flo = lo.max(1) as f64;
    let fhi = hi as f64;
    let steps = max_points - 2;
    for i in 1..=steps {
        let t = i as f64 / (steps + 1) as f64;
        let x = (flo.ln() + t * (fhi.ln() - flo.ln())).exp().round() as usize;
        pts.push(x.clamp(lo, hi));
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// CSV dump of residual records:
/// series_id,lemma,k0,k1,n,residual_num,residual_den,envelope,pass
/// with empty envelope/pass fields for unchecked records. The lemma column
/// carries the residual family name.
pub fn residuals_to_csv(series_id: &str, records: &[ResidualRecord]) -> String {
    let mut out =
        String::from("series_id,lemma,k0,k1,n,residual_num,residual_den,envelope,pass\n");
    for r in records {
        let envelope = r.envelope.map(|e| format!("{e}")).unwrap_or_default();
        let pass = r.pass.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            series_id,
            r.family.name(),
            r.k0,
            r.k1,
            r.n,
            r.residual.numer(),
            r.residual.denom(),
            envelope,
            pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{parse_rat, rat, rat_int};
    use crate::sequences::{certify_growth, generate, SeriesSpec};

    fn sigma_split(n: usize) -> SplitSeries {
        SplitSeries::new(&generate(&SeriesSpec::SigmaShifted, n).unwrap()).unwrap()
    }

    fn sigma_cert(n: usize, c: &str, alpha: &str) -> GrowthCertificate {
        let g = generate(&SeriesSpec::SigmaShifted, n).unwrap();
        certify_growth(&g, &parse_rat(c).unwrap(), &parse_rat(alpha).unwrap()).unwrap()
    }

    fn constant2_cert(n: usize) -> GrowthCertificate {
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(2) }, n).unwrap();
        certify_growth(&f, &rat_int(2), &Rat::zero()).unwrap()
    }

    #[test]
    fn split_requires_one_lower_bounded() {
        let bad = TruncatedSeries::new(vec![rat_int(1), rat(1, 2)]);
        assert!(matches!(SplitSeries::new(&bad), Err(Error::Domain(_))));
        let split = sigma_split(30);
        assert_eq!(
            split.recombined().coeffs(),
            generate(&SeriesSpec::SigmaShifted, 30).unwrap().coeffs()
        );
        assert!(split.zeros_part().coeffs().iter().all(|c| c.is_one()));
    }

    #[test]
    fn all_zeros_class_is_binomial() {
        let split = sigma_split(25);
        for k0 in [1u32, 2, 3, 5] {
            for n in [0usize, 1, 7, 25] {
                let expect = Rat::from_integer(binomial(
                    (n + k0 as usize - 1) as u64,
                    u64::from(k0) - 1,
                ));
                assert_eq!(a_i(&split, k0, 0, n).unwrap(), expect, "k0={k0} n={n}");
            }
        }
    }

    #[test]
    fn one_one_class_is_excess_partial_sum() {
        // Class (1,1) at n is (a_0 - 1) + ... + (a_n - 1): prefix sums of
        // the excess, summed directly as the oracle.
        let g = generate(&SeriesSpec::SigmaShifted, 40).unwrap();
        let split = SplitSeries::new(&g).unwrap();
        for n in [0usize, 3, 17, 40] {
            let direct: Rat = (0..=n).map(|m| g.coeff(m) - Rat::one()).sum();
            assert_eq!(a_i(&split, 1, 1, n).unwrap(), direct, "n={n}");
        }
    }

    #[test]
    fn constant_c_classes_have_closed_form() {
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(3) }, 20).unwrap();
        let split = SplitSeries::new(&f).unwrap();
        for (k0, k1) in [(1u32, 1u32), (2, 1), (1, 2), (2, 3), (0, 2)] {
            let k = k0 + k1;
            for n in [0usize, 2, 9, 20] {
                let expect = Rat::from_integer(binomial(
                    (n + k as usize - 1) as u64,
                    u64::from(k) - 1,
                )) * rat_int(2).pow(k1 as i32);
                assert_eq!(a_i(&split, k0, k1, n).unwrap(), expect, "({k0},{k1}) n={n}");
            }
        }
    }

    #[test]
    fn brute_force_agrees_and_permutation_invariant() {
        let split = sigma_split(12);
        let groups: [&[&[u8]]; 3] = [
            &[&[1, 0], &[0, 1]],
            &[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]],
            &[&[1, 0, 0, 1], &[0, 1, 1, 0]],
        ];
        for group in groups {
            let k = group[0].len() as u32;
            let k1 = group[0].iter().map(|&b| u32::from(b)).sum::<u32>();
            let k0 = k - k1;
            for n in [0usize, 1, 5, 10] {
                let class_value = a_i(&split, k0, k1, n).unwrap();
                for tuple in group {
                    assert_eq!(
                        a_i_bruteforce(&split, tuple, n).unwrap(),
                        class_value,
                        "tuple {tuple:?} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn brute_force_guards_scale() {
        let split = sigma_split(100);
        assert!(matches!(
            a_i_bruteforce(&split, &[1, 1, 1, 1, 1, 1, 1, 1], 100),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn partition_sum_holds_on_three_kinds() {
        let specs = [
            SeriesSpec::Geometric { scale: Rat::one() },
            SeriesSpec::ConstantC { c: rat_int(2) },
            SeriesSpec::SigmaShifted,
        ];
        for spec in &specs {
            let f = generate(spec, 25).unwrap();
            let split = SplitSeries::new(&f).unwrap();
            let table = PowerTable::build(&f, &spec.id(), 5, 25).unwrap();
            for k in 1..=5u32 {
                let checks = partition_sum_identity_range(&table, &split, k, 25).unwrap();
                assert_eq!(checks.len(), 26);
                for chk in checks {
                    assert!(chk.holds, "{} on {}", chk.what, spec.id());
                }
            }
        }
    }

    #[test]
    fn second_difference_collapses_exactly() {
        let split = sigma_split(40);
        for (k0, k1) in [(2u32, 0u32), (2, 1), (3, 2), (4, 3)] {
            let checks = second_diff_identity_range(&split, k0, k1, 30).unwrap();
            assert_eq!(checks.len(), 32);
            for chk in checks {
                assert!(chk.holds, "{}", chk.what);
            }
        }
        // The boundary case in isolation: at n = -1 only the a^I_0 term
        // survives on the left and the empty class contributes 1.
        let chk = second_diff_identity(&split, 2, 0, -1).unwrap();
        assert!(chk.holds);
        assert_eq!(chk.lhs, Rat::one());
    }

    #[test]
    fn second_difference_rejects_small_k0() {
        let split = sigma_split(10);
        assert!(matches!(
            second_diff_identity(&split, 1, 3, 5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn one_zero_residual_is_scaled_deviation_at_k2() {
        // R_{n,2} = (C(n+1) - S_n) / ((C-1)(n+1)) with S_n the raw partial
        // sum: both sides computed independently. With alpha = 0 the
        // envelope is exact and the direct bound R <= D/(n+1) must hold.
        let n_max = 200usize;
        let g = generate(&SeriesSpec::SigmaShifted, n_max).unwrap();
        let split = SplitSeries::new(&g).unwrap();
        let cert = sigma_cert(n_max, "17/10", "0/1");
        let c = cert.c.clone();
        let mut s = Rat::zero();
        for n in [0usize, 1, 9, 60, 200] {
            // Recompute the partial sum from scratch so the oracle shares
            // nothing with the prefix-sum path.
            s = (0..=n).map(|m| g.coeff(m).clone()).sum();
            let expect = (&c * rat_int((n + 1) as i64) - &s)
                / ((&c - Rat::one()) * rat_int((n + 1) as i64));
            let rec = residual_one_zero(&split, &cert, 2, n).unwrap();
            assert_eq!(rec.residual, expect, "n={n}");
            assert!(rec.residual >= Rat::zero());
            // dev_n <= D at alpha = 0 divides through to this bound.
            let direct_bound = &cert.d / ((&c - Rat::one()) * rat_int((n + 1) as i64));
            assert!(
                rec.residual <= direct_bound,
                "direct D/((C-1)(n+1)) bound at n={n}"
            );
            assert_eq!(rec.pass, Some(true));
        }
        let _ = s;
    }

    #[test]
    fn constant_c_residuals_vanish() {
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(2) }, 40).unwrap();
        let split = SplitSeries::new(&f).unwrap();
        let cert = constant2_cert(40);
        for k in [2u32, 3, 5] {
            for n in [0usize, 7, 25, 40] {
                let rec = residual_one_zero(&split, &cert, k, n).unwrap();
                assert!(rec.residual.is_zero(), "R at k={k} n={n}");
                assert_eq!(rec.pass, Some(true));
            }
        }
        for (k0, k1) in [(2u32, 2u32), (3, 1), (1, 4), (4, 0)] {
            let rec = residual_at_least_one_zero(&split, &cert, k0, k1, 20).unwrap();
            assert!(rec.residual.is_zero(), "S at ({k0},{k1})");
        }
        // k1 = 0 classes are pure binomial for ANY series, not just
        // constant ones.
        let sigma = sigma_split(20);
        let cert_sigma = sigma_cert(20, "17/10", "0/1");
        let rec = residual_at_least_one_zero(&sigma, &cert_sigma, 3, 0, 15).unwrap();
        assert!(rec.residual.is_zero());
    }

    #[test]
    fn constant_c_difference_residuals_match_closed_forms() {
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(2) }, 40).unwrap();
        let cert = constant2_cert(40);
        let table = PowerTable::build(&f, "constant:2", 6, 40).unwrap();
        for k in [3u32, 4, 6] {
            for n in [1usize, 5, 17, 30] {
                let [r2, r1, r0] = residual_differences(&table, &cert, k, n).unwrap();
                let m = (n + k as usize - 2) as u64;
                let nk = Int::from((n + k as usize) as u64);
                let expect = |top: u64, power: u32| -> Rat {
                    Rat::new(
                        binomial(m, top) * factorial(u64::from(power)),
                        nk.clone().pow(power),
                    ) - Rat::one()
                };
                assert_eq!(r2.residual, expect(u64::from(k) - 3, k - 3), "R2 k={k} n={n}");
                assert_eq!(r1.residual, expect(u64::from(k) - 2, k - 2), "R1 k={k} n={n}");
                assert_eq!(r0.residual, expect(u64::from(k) - 1, k - 1), "R0 k={k} n={n}");
            }
        }
        // k = 3 collapses the second-difference main term to C^k exactly.
        let [r2, _, _] = residual_differences(&table, &cert, 3, 10).unwrap();
        assert!(r2.residual.is_zero());
    }

    #[test]
    fn ratio_factors_through_difference_residuals() {
        // a_{n-1} (second diff) / (first diff)^2 equals
        // (k-2)/(k-1) (1+R0)(1+R2)/(1+R1)^2 exactly: the main terms cancel
        // because (k-1)+(k-3) = 2(k-2) in the (n+k) powers and
        // (k-2)!^2/((k-1)!(k-3)!) = (k-2)/(k-1).
        let g = generate(&SeriesSpec::SigmaShifted, 60).unwrap();
        let cert = sigma_cert(60, "17/10", "0/1");
        let table = PowerTable::build(&g, "sigma-shifted", 5, 60).unwrap();
        let k = 5u32;
        for n in [3usize, 10, 24] {
            let [r2, r1, r0] = residual_differences(&table, &cert, k, n).unwrap();
            let ratio = crate::logconcavity::ratio_criterion_row(&table, k, n)
                .unwrap()
                .ratio
                .unwrap();
            let one = Rat::one();
            let expect = rat(i64::from(k) - 2, i64::from(k) - 1)
                * (&one + &r0.residual)
                * (&one + &r2.residual)
                / ((&one + &r1.residual) * (&one + &r1.residual));
            assert_eq!(ratio, expect, "n={n}");
        }
    }

    #[test]
    fn scan_matches_per_call_and_finds_no_negatives() {
        let n_max = 300usize;
        let g = generate(&SeriesSpec::SigmaShifted, n_max).unwrap();
        let split = SplitSeries::new(&g).unwrap();
        let cert = sigma_cert(n_max, "17/10", "0/1");
        let excess_table =
            PowerTable::build(split.ones_part(), "sigma-shifted-excess", 2, n_max).unwrap();
        let samples = [0usize, 1, 13, 100, 300];
        let scan = scan_one_zero(excess_table.row(2).unwrap(), &cert, 3, &samples).unwrap();
        assert_eq!(scan.negative_at, None);
        assert_eq!(scan.checked_up_to, n_max);
        assert_eq!(scan.records.len(), samples.len());
        for rec in &scan.records {
            let per_call = residual_one_zero(&split, &cert, 3, rec.n).unwrap();
            assert_eq!(rec.residual, per_call.residual, "n={}", rec.n);
        }

        let table = PowerTable::build(&g, "sigma-shifted", 3, n_max).unwrap();
        let via_scan = scan_differences(table.row(3).unwrap(), &cert, 3, &[10, 50]).unwrap();
        let direct = residual_differences(&table, &cert, 3, 10).unwrap();
        assert_eq!(via_scan[0].residual, direct[0].residual);
        assert_eq!(via_scan[1].residual, direct[1].residual);
        assert_eq!(via_scan[2].residual, direct[2].residual);
    }

    #[test]
    fn adversarial_certificate_is_flagged_by_stability() {
        // All-ones series with a fabricated C = 2 certificate: the excess
        // is zero, so R = 1 identically and the fitted constant grows like
        // (n+1)^{1-alpha}. With alpha = 1/2, doubling the range multiplies
        // the fit by about sqrt(2), far past a 10% allowance.
        let ones = generate(&SeriesSpec::Geometric { scale: Rat::one() }, 400).unwrap();
        let split = SplitSeries::new(&ones).unwrap();
        let fake = GrowthCertificate {
            c: rat_int(2),
            d: Rat::one(),
            alpha: rat(1, 2),
            verified_up_to: 400,
            growth_base: None,
        };
        let samples = sample_log_grid(0, 400, 40);
        let mut records = Vec::new();
        for n in samples {
            records.push(residual_one_zero(&split, &fake, 3, n).unwrap());
        }
        for rec in &records {
            assert!(rec.residual.is_one(), "excess is zero so R = 1");
        }
        let report = fit_stability(&records, 200, 0.10).unwrap();
        assert!(report.flagged, "growth {} should exceed 1.1", report.growth);
        assert!(report.growth > 1.25);

        // The honest constant-series control: residuals all zero, fit 0,
        // growth pinned to 1, not flagged.
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(2) }, 100).unwrap();
        let split = SplitSeries::new(&f).unwrap();
        let cert = constant2_cert(100);
        let mut records = Vec::new();
        for n in sample_log_grid(0, 100, 20) {
            records.push(residual_one_zero(&split, &cert, 3, n).unwrap());
        }
        let report = fit_stability(&records, 50, 0.10).unwrap();
        assert_eq!(report.full.constant, 0.0);
        assert_eq!(report.growth, 1.0);
        assert!(!report.flagged);
    }

    #[test]
    fn window_reachable_for_all_ones_and_empty_for_sigma() {
        // All-ones series: C = 1 certificate, no finite base, window
        // [k^5, infinity). At k = 3 the window opens at 243 and every
        // sampled residual obeys |R| <= 1/9: R2 = 0, R1 = -2/(n+3),
        // R0 = -(5n+9)/(n+3)^2 there.
        let ones = generate(&SeriesSpec::Geometric { scale: Rat::one() }, 400).unwrap();
        let cert = certify_growth(&ones, &Rat::one(), &Rat::zero()).unwrap();
        assert!(cert.growth_base.is_none());
        let table = PowerTable::build(&ones, "geometric", 3, 400).unwrap();
        let report = window_check(&table, &cert, 3, 8).unwrap();
        assert_eq!(report.window.n_low, 243);
        assert_eq!(report.window.n_high, None);
        assert_eq!(report.usable, Some((243, 399)));
        assert_eq!(report.all_within, Some(true));

        // Sigma series certified at alpha = 9/10: the lower end k^50
        // saturates and the window is empty at any reachable truncation.
        let cert = sigma_cert(300, "17/10", "9/10");
        let g = generate(&SeriesSpec::SigmaShifted, 300).unwrap();
        let table = PowerTable::build(&g, "sigma-shifted", 3, 300).unwrap();
        let report = window_check(&table, &cert, 3, 8).unwrap();
        assert_eq!(report.usable, None);
        assert_eq!(report.all_within, None);

        // Constant series with C = 2: finite base sqrt(2), upper end
        // 2^{k/2}/k^2 stays below the lower end k^5 for every k, so the
        // window is empty there too.
        let cert = constant2_cert(100);
        let f = generate(&SeriesSpec::ConstantC { c: rat_int(2) }, 100).unwrap();
        let table = PowerTable::build(&f, "constant:2", 3, 100).unwrap();
        let report = window_check(&table, &cert, 3, 8).unwrap();
        assert_eq!(report.usable, None);
    }

    #[test]
    fn csv_dump_has_stable_columns() {
        let split = sigma_split(20);
        let cert = sigma_cert(20, "17/10", "0/1");
        let records = vec![
            residual_one_zero(&split, &cert, 2, 10).unwrap(),
            residual_one_zero(&split, &cert, 3, 20).unwrap(),
        ];
        let csv = residuals_to_csv("sigma-shifted", &records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "series_id,lemma,k0,k1,n,residual_num,residual_den,envelope,pass"
        );
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 9);
            assert_eq!(cols[0], "sigma-shifted");
            assert_eq!(cols[1], "one-zero");
            assert_eq!(cols[8], "true");
        }
    }

    #[test]
    fn sample_grid_covers_ends_and_dedups() {
        assert_eq!(sample_log_grid(3, 7, 10), vec![3, 4, 5, 6, 7]);
        let grid = sample_log_grid(1, 10_000, 12);
        assert_eq!(grid.len(), 12);
        assert_eq!(*grid.first().unwrap(), 1);
        assert_eq!(*grid.last().unwrap(), 10_000);
        let sorted = {
            let mut g = grid.clone();
            g.sort_unstable();
            g.dedup();
            g
        };
        assert_eq!(grid, sorted);
    }

    #[test]
    fn record_serializes_exact_residual() {
        let split = sigma_split(10);
        let cert = sigma_cert(10, "17/10", "0/1");
        let rec = residual_one_zero(&split, &cert, 2, 4).unwrap();
        let json = serde_json::to_value(&rec).unwrap();
        assert_eq!(json["family"], "one-zero");
        let text = json["residual"].as_str().unwrap();
        assert_eq!(parse_rat(text).unwrap(), rec.residual);
    }
}
