//! Coefficient sequence families, divisor-sum arithmetic, exact average
//! bounds, and growth certificates of the form
//! 0 <= C(n+1) - (a_0 + ... + a_n) <= D (n+1)^alpha.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use num_traits::{One, Signed, Zero};
use rug::float::Round;
use rug::{Assign, Complete, Float, Integer};

use crate::error::{Error, Result};
use crate::hiprec::{pi_squared, Enclosure};
use crate::rat::{int_to_rug, parse_rat, rat, rug_to_rat, Rat};
use crate::series::TruncatedSeries;

/// The built-in sequence families plus external coefficient files.
///
/// * `Geometric { scale }`: every coefficient equals `scale` (the function
///   scale/(1-z)); scale >= 1 keeps the family 1-lower-bounded.
/// * `ConstantC { c }`: every coefficient equals `c`. The same sequence as a
///   scaled geometric, kept as its own kind because it plays a different
///   role: it is the degenerate certificate case with deviation exactly 0.
/// * `SigmaShifted`: a_n = sigma_1(n+1)/(n+1), the divisor-sum average.
/// * `Sigma`: a_0 = 0 and a_n = sigma_1(n)/n, the shift of the above.
/// * `CustomFile`: one coefficient per line, "p/q" or integer, '#' comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesSpec {
    Geometric { scale: Rat },
    ConstantC { c: Rat },
    SigmaShifted,
    Sigma,
    CustomFile { path: PathBuf },
}

impl SeriesSpec {
    /// Parses a series id: "geometric", "geometric:p/q", "constant:p/q",
    /// "sigma-shifted", "sigma", or "custom:<path>".
    pub fn parse(id: &str) -> Result<Self> {
        let bad = |msg: String| Err(Error::Domain(msg));
        match id {
            "geometric" => {
                return Ok(SeriesSpec::Geometric {
                    scale: Rat::one(),
                })
            }
            "sigma-shifted" => return Ok(SeriesSpec::SigmaShifted),
            "sigma" => return Ok(SeriesSpec::Sigma),
            _ => {}
        }
        if let Some(rest) = id.strip_prefix("geometric:") {
            let scale = parse_rat(rest)?;
            if scale < Rat::one() {
                return bad(format!("geometric scale {scale} must be >= 1"));
            }
            return Ok(SeriesSpec::Geometric { scale });
        }
        if let Some(rest) = id.strip_prefix("constant:") {
            let c = parse_rat(rest)?;
            if c < Rat::one() {
                return bad(format!("constant level {c} must be >= 1"));
            }
            return Ok(SeriesSpec::ConstantC { c });
        }
        if let Some(rest) = id.strip_prefix("custom:") {
            if rest.is_empty() {
                return bad("custom: needs a file path".into());
            }
            return Ok(SeriesSpec::CustomFile {
                path: PathBuf::from(rest),
            });
        }
        bad(format!(
            "unknown series id {id:?} (expected geometric[:p/q], constant:p/q, sigma-shifted, sigma, or custom:<path>)"
        ))
    }

    /// The canonical id string, parseable by `parse`.
    pub fn id(&self) -> String {
        match self {
            SeriesSpec::Geometric { scale } if scale.is_one() => "geometric".into(),
            SeriesSpec::Geometric { scale } => format!("geometric:{scale}"),
            SeriesSpec::ConstantC { c } => format!("constant:{c}"),
            SeriesSpec::SigmaShifted => "sigma-shifted".into(),
            SeriesSpec::Sigma => "sigma".into(),
            SeriesSpec::CustomFile { path } => format!("custom:{}", path.display()),
        }
    }
}

/// Divisor sum sigma_1(n) for a single n >= 1, by trial division up to
/// sqrt(n). Use the sieve for bulk ranges.
pub fn sigma_one(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("sigma_1(0) is undefined".into()));
    }
    let mut total = 0u64;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            total += d;
            let q = n / d;
            if q != d {
                total += q;
            }
        }
        d += 1;
    }
    Ok(total)
}

/// sigma_1(m) for every m in 0..=n_max (index 0 is unused and holds 0), by
/// summing each divisor over its multiples.
pub fn sigma_one_sieve(n_max: usize) -> Vec<u64> {
    let mut v = vec![0u64; n_max + 1];
    for d in 1..=n_max {
        for m in (d..=n_max).step_by(d) {
            v[m] += d as u64;
        }
    }
    v
}

/// sigma_{-1}(n) = sigma_1(n)/n, the sum of reciprocals of divisors.
/// Rejects n = 0, where the divisor sum is undefined.
pub fn sigma_minus_one(n: u64) -> Result<Rat> {
    Ok(Rat::new(
        crate::rat::Int::from(sigma_one(n)?),
        crate::rat::Int::from(n),
    ))
}

/// Generates the coefficient prefix a_0..a_n of a series family.
pub fn generate(spec: &SeriesSpec, n: usize) -> Result<TruncatedSeries> {
    match spec {
        SeriesSpec::Geometric { scale } => Ok(TruncatedSeries::constant(scale, n)),
        SeriesSpec::ConstantC { c } => Ok(TruncatedSeries::constant(c, n)),
        SeriesSpec::SigmaShifted => {
            let sig = sigma_one_sieve(n + 1);
            Ok(TruncatedSeries::new(
                (0..=n)
                    .map(|m| {
                        Rat::new(
                            crate::rat::Int::from(sig[m + 1]),
                            crate::rat::Int::from(m as u64 + 1),
                        )
                    })
                    .collect(),
            ))
        }
        SeriesSpec::Sigma => {
            let sig = sigma_one_sieve(n);
            let mut coeffs = vec![Rat::zero()];
            coeffs.extend(sig.iter().enumerate().skip(1).map(|(m, s)| {
                Rat::new(crate::rat::Int::from(*s), crate::rat::Int::from(m as u64))
            }));
            Ok(TruncatedSeries::new(coeffs))
        }
        SeriesSpec::CustomFile { path } => read_coefficient_file(path, n),
    }
}

/// Reads "p/q"-or-integer lines from a coefficient file. Blank lines and
/// lines starting with '#' are skipped; anything else must parse, be
/// non-negative, and there must be at least n+1 coefficients.
fn read_coefficient_file(path: &Path, n: usize) -> Result<TruncatedSeries> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut coeffs = Vec::new();
    let mut last_line = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        last_line = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value = parse_rat(trimmed).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if value.is_negative() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("negative coefficient {trimmed}"),
            });
        }
        coeffs.push(value);
        if coeffs.len() == n + 2 {
            break; // One spare proves there are enough; no need to read more.
        }
    }
    if coeffs.len() < n + 1 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: last_line,
            msg: format!("file provides {} coefficients, need {}", coeffs.len(), n + 1),
        });
    }
    coeffs.truncate(n + 1);
    Ok(TruncatedSeries::new(coeffs))
}

/// Result of the exact running-average scan of a coefficient prefix.
#[derive(Debug, Clone)]
pub struct AverageBoundReport {
    pub bound: Rat,
    pub checked_up_to: usize,
    /// Largest running average (a_0 + ... + a_n)/(n+1) over the prefix.
    pub max_average: Rat,
    pub argmax: usize,
    /// First n whose running average strictly exceeds the bound.
    pub first_violation: Option<usize>,
}

/// Exact scan of running averages against a rational bound. All arithmetic
/// is integer: coefficients are brought to the common denominator once and
/// prefix sums are compared by cross-multiplication.
pub fn check_average_bound(f: &TruncatedSeries, bound: &Rat) -> AverageBoundReport {
    let n_max = f.truncation_order();
    let mut den = Integer::from(1);
    for c in f.coeffs() {
        den.lcm_mut(&int_to_rug(c.denom()));
    }
    let p = int_to_rug(bound.numer());
    let q = int_to_rug(bound.denom());

    let mut t = Integer::new(); // running sum scaled by den
    let mut best_t = Integer::new();
    let mut best_n = 0usize;
    let mut first_violation = None;
    for (n, c) in f.coeffs().iter().enumerate() {
        let scaled = int_to_rug(c.numer()) * den.div_exact_ref(&int_to_rug(c.denom())).complete();
        t += scaled;
        // max average: t/(n+1) vs best_t/(best_n+1), cross-multiplied.
        if n == 0 || (&t * (best_n as u64 + 1)).complete() > (&best_t * (n as u64 + 1)).complete() {
            best_t.assign(&t);
            best_n = n;
        }
        if first_violation.is_none()
            && (&t * &q).complete() > (&p * (n as u64 + 1)).complete() * &den
        {
            first_violation = Some(n);
        }
    }
    let max_average = rug_to_rat(&rug::Rational::from((
        best_t,
        den * (best_n as u64 + 1),
    )));
    AverageBoundReport {
        bound: bound.clone(),
        checked_up_to: n_max,
        max_average,
        argmax: best_n,
        first_violation,
    }
}

/// A verified growth certificate: 0 <= C(n+1) - S_n <= D (n+1)^alpha for all
/// n up to `verified_up_to`, where S_n is the coefficient prefix sum.
///
/// `growth_base` is (C/(C-1))^(1/(2+alpha)), the base of the log-concavity
/// frontier the certificate implies; it is None exactly when C = 1 (zero
/// deviation, frontier unbounded).
#[derive(Debug, Clone)]
pub struct GrowthCertificate {
    pub c: Rat,
    pub d: Rat,
    pub alpha: Rat,
    pub verified_up_to: usize,
    pub growth_base: Option<Enclosure>,
}

impl GrowthCertificate {
    pub fn c_f64(&self) -> f64 {
        rat_f64(&self.c)
    }

    pub fn d_f64(&self) -> f64 {
        rat_f64(&self.d)
    }

    pub fn alpha_f64(&self) -> f64 {
        rat_f64(&self.alpha)
    }
}

pub(crate) fn rat_f64(r: &Rat) -> f64 {
    crate::rat::rat_to_rug(r).to_f64()
}

/// Precision for certificate floats: wide enough that directed-rounding
/// slack never competes with the quantities certified at desk scale.
const CERT_PREC: u32 = 128;

/// Establishes a growth certificate with the given C and alpha, computing
/// the smallest workable D (exactly for alpha = 0, with a relative 2^-96
/// up-inflation otherwise, which keeps D valid by construction).
///
/// Fails with the first offending n when any deviation C(n+1) - S_n is
/// negative: C is below the running mean there and no D can help.
pub fn certify_growth(f: &TruncatedSeries, c: &Rat, alpha: &Rat) -> Result<GrowthCertificate> {
    if c < &Rat::one() {
        return Err(Error::Domain(format!(
            "certificate C = {c} is below 1; prefix sums of a 1-lower-bounded series grow at least like n+1"
        )));
    }
    if alpha.is_negative() || alpha >= &Rat::one() {
        return Err(Error::Domain(format!(
            "certificate exponent alpha = {alpha} must lie in [0, 1)"
        )));
    }
    let n_max = f.truncation_order();

    let mut den = Integer::from(1);
    for coeff in f.coeffs() {
        den.lcm_mut(&int_to_rug(coeff.denom()));
    }
    let q = q_of(c);
    let qd = (&q * &den).complete();
    let qd_down = Float::with_val_round(CERT_PREC, &qd, Round::Down).0;
    let p = int_to_rug(c.numer());

    let mut t = Integer::new();
    let mut max_dev = Integer::new(); // scaled by q*den; for the alpha = 0 path
    let mut d_up = Float::new(CERT_PREC); // for the alpha > 0 path
    let alpha_zero = alpha.is_zero();
    for (n, coeff) in f.coeffs().iter().enumerate() {
        let scaled =
            int_to_rug(coeff.numer()) * den.div_exact_ref(&int_to_rug(coeff.denom())).complete();
        t += scaled;
        // dev_scaled = (C(n+1) - S_n) * q * den, exact.
        let dev_scaled = (&p * (n as u64 + 1)).complete() * &den - (&t * &q).complete();
        if dev_scaled.cmp0() == std::cmp::Ordering::Less {
            return Err(Error::Certificate {
                first_offending_n: n,
            });
        }
        if alpha_zero {
            if dev_scaled > max_dev {
                max_dev = dev_scaled;
            }
        } else {
            // dev/(n+1)^alpha rounded up: up(dev)/[down(q*den) * down((n+1)^alpha)].
            let dev_up = Float::with_val_round(CERT_PREC, &dev_scaled, Round::Up).0;
            let pow_down = Enclosure::from_int(CERT_PREC, &Integer::from(n as u64 + 1))
                .pow_rat(alpha)
                .lo;
            let denom_down =
                Float::with_val_round(CERT_PREC, &qd_down * &pow_down, Round::Down).0;
            let ratio_up = Float::with_val_round(CERT_PREC, &dev_up / &denom_down, Round::Up).0;
            if ratio_up > d_up {
                d_up = ratio_up;
            }
        }
    }

    let d = if alpha_zero {
        rug_to_rat(&rug::Rational::from((max_dev, qd)))
    } else {
        // Exact dyadic value of the up-rounded maximum, inflated by 2^-96 so
        // the bound stays strict despite the rounding of the maximum itself.
        let exact = rug_to_rat(&d_up.to_rational().expect("finite certificate bound"));
        let slack = Rat::new(
            (crate::rat::Int::from(1) << 96) + 1,
            crate::rat::Int::from(1) << 96,
        );
        exact * slack
    };

    let growth_base = if c.is_one() {
        None
    } else {
        let base = c / (c - Rat::one());
        let exponent = Rat::one() / (rat(2, 1) + alpha);
        Some(Enclosure::from_rat(CERT_PREC, &base).pow_rat(&exponent))
    };

    Ok(GrowthCertificate {
        c: c.clone(),
        d,
        alpha: alpha.clone(),
        verified_up_to: n_max,
        growth_base,
    })
}

fn q_of(c: &Rat) -> Integer {
    int_to_rug(c.denom())
}

/// Outcome of re-checking a claimed certificate against a coefficient
/// prefix.
#[derive(Debug, Clone)]
pub struct CertificateCheck {
    pub holds: bool,
    pub first_offending_n: Option<usize>,
    pub checked_up_to: usize,
}

/// Re-verifies a claimed (C, D, alpha) against the coefficients: exact on
/// the sign of the deviation and on the alpha = 0 upper bound; directed
/// 128-bit comparison otherwise, with an error if some margin is too thin to
/// decide in either direction.
pub fn verify_certificate(f: &TruncatedSeries, cert: &GrowthCertificate) -> Result<CertificateCheck> {
    let n_max = f.truncation_order();
    let mut den = Integer::from(1);
    for coeff in f.coeffs() {
        den.lcm_mut(&int_to_rug(coeff.denom()));
    }
    let q = q_of(&cert.c);
    let p = int_to_rug(cert.c.numer());
    let qd = (&q * &den).complete();
    let alpha_zero = cert.alpha.is_zero();

    let mut t = Integer::new();
    for (n, coeff) in f.coeffs().iter().enumerate() {
        let scaled =
            int_to_rug(coeff.numer()) * den.div_exact_ref(&int_to_rug(coeff.denom())).complete();
        t += scaled;
        let dev_scaled = (&p * (n as u64 + 1)).complete() * &den - (&t * &q).complete();
        let fail = |n: usize| CertificateCheck {
            holds: false,
            first_offending_n: Some(n),
            checked_up_to: n_max,
        };
        if dev_scaled.cmp0() == std::cmp::Ordering::Less {
            return Ok(fail(n));
        }
        if alpha_zero {
            // dev <= D exactly: dev_scaled/qd <= pd/qd2.
            let lhs = (&dev_scaled * &int_to_rug(cert.d.denom())).complete();
            let rhs = (&int_to_rug(cert.d.numer()) * &qd).complete();
            if lhs > rhs {
                return Ok(fail(n));
            }
        } else {
            // Directed comparison of dev/(q den) against D (n+1)^alpha.
            let dev = Enclosure::new(
                Float::with_val_round(CERT_PREC, &dev_scaled, Round::Down).0,
                Float::with_val_round(CERT_PREC, &dev_scaled, Round::Up).0,
            )
            .div(&Enclosure::from_int(CERT_PREC, &qd));
            let rhs = Enclosure::from_int(CERT_PREC, &Integer::from(n as u64 + 1))
                .pow_rat(&cert.alpha)
                .mul(&Enclosure::from_rat(CERT_PREC, &cert.d));
            if dev.hi <= rhs.lo {
                continue; // certified pass at this n
            }
            if dev.lo > rhs.hi {
                return Ok(fail(n));
            }
            return Err(Error::Precision {
                what: format!(
                    "certificate margin at n={n} is thinner than 128-bit directed rounding can decide"
                ),
                required_n: n_max,
            });
        }
    }
    Ok(CertificateCheck {
        holds: true,
        first_offending_n: None,
        checked_up_to: n_max,
    })
}

/// Result of the directed-rounding verification of divisor-sum partial-sum
/// bounds. Margins are the smallest certified distances to either bound,
/// normalized by n+1 (diagnostic, nearest-rounded).
#[derive(Debug, Clone)]
pub struct PartialSumBoundsReport {
    pub n_max: usize,
    pub precision_bits: u32,
    pub min_upper_margin: f64,
    pub min_upper_margin_at: usize,
    pub min_lower_margin: f64,
    pub min_lower_margin_at: usize,
}

/// Verifies, for every 0 <= n <= n_max with directed rounding at `bits`,
/// that the divisor-sum partial sum S_n = sum_{m<=n} sigma_1(m+1)/(m+1)
/// satisfies
///
///   pi^2 (n+1)/6 - log(n+1) - 1 <= S_n <= pi^2 (n+1)/6.
///
/// The running sum is kept as a [down, up] float pair; each bound comparison
/// uses the unfavorable end, so a pass is a certificate. A margin thinner
/// than the rounding width is reported as a precision error, naming n.
pub fn sigma_partial_sum_bounds(n_max: usize, bits: u32) -> Result<PartialSumBoundsReport> {
    let prec = bits.max(64);
    let sig = sigma_one_sieve(n_max + 1);
    let pi2 = pi_squared(prec);
    let six = Float::with_val(prec, 6);

    let mut s_lo = Float::new(prec);
    let mut s_hi = Float::new(prec);
    let mut min_upper = f64::INFINITY;
    let mut min_upper_at = 0usize;
    let mut min_lower = f64::INFINITY;
    let mut min_lower_at = 0usize;

    for n in 0..=n_max {
        let m1 = n as u64 + 1;
        let num = Float::with_val(prec, sig[n + 1]);
        s_lo = Float::with_val_round(prec, &s_lo + &Float::with_val_round(prec, &num / m1, Round::Down).0, Round::Down).0;
        s_hi = Float::with_val_round(prec, &s_hi + &Float::with_val_round(prec, &num / m1, Round::Up).0, Round::Up).0;

        // Upper bound: S_n <= pi^2 (n+1)/6, checked as s_hi <= down(rhs).
        let rhs_down = {
            let t = Float::with_val_round(prec, &pi2.lo * m1, Round::Down).0;
            Float::with_val_round(prec, &t / &six, Round::Down).0
        };
        if s_hi > rhs_down {
            return Err(Error::Precision {
                what: format!(
                    "upper partial-sum bound not certified at n={n}: sum up to {} vs bound down to {}",
                    s_hi.to_f64(),
                    rhs_down.to_f64()
                ),
                required_n: n_max,
            });
        }
        let margin = (rhs_down.to_f64() - s_hi.to_f64()) / (m1 as f64);
        if margin < min_upper {
            min_upper = margin;
            min_upper_at = n;
        }

        // Lower bound: S_n >= pi^2 (n+1)/6 - log(n+1) - 1, as s_lo >= up(rhs).
        let rhs_up = {
            let t = Float::with_val_round(prec, &pi2.hi * m1, Round::Up).0;
            let t = Float::with_val_round(prec, &t / &six, Round::Up).0;
            let ln_down = Float::with_val_round(prec, Float::with_val(prec, m1).ln_ref(), Round::Down).0;
            let t = Float::with_val_round(prec, &t - &ln_down, Round::Up).0;
            Float::with_val_round(prec, &t - 1u32, Round::Up).0
        };
        if s_lo < rhs_up {
            return Err(Error::Precision {
                what: format!(
                    "lower partial-sum bound not certified at n={n}: sum down to {} vs bound up to {}",
                    s_lo.to_f64(),
                    rhs_up.to_f64()
                ),
                required_n: n_max,
            });
        }
        let margin = (s_lo.to_f64() - rhs_up.to_f64()) / (m1 as f64);
        if margin < min_lower {
            min_lower = margin;
            min_lower_at = n;
        }
    }

    Ok(PartialSumBoundsReport {
        n_max,
        precision_bits: prec,
        min_upper_margin: min_upper,
        min_upper_margin_at: min_upper_at,
        min_lower_margin: min_lower,
        min_lower_margin_at: min_lower_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    #[test]
    fn sigma_one_known_values() {
        // sigma_1(1) = 1, sigma_1(6) = 12 and sigma_1(28) = 56 (perfect
        // numbers double), sigma_1(10) = 18.
        assert_eq!(sigma_one(1).unwrap(), 1);
        assert_eq!(sigma_one(6).unwrap(), 12);
        assert_eq!(sigma_one(28).unwrap(), 56);
        assert_eq!(sigma_one(10).unwrap(), 18);
        assert!(sigma_one(0).is_err());
    }

    #[test]
    fn sieve_matches_single_evaluation() {
        let sieve = sigma_one_sieve(500);
        for n in 1..=500u64 {
            assert_eq!(sieve[n as usize], sigma_one(n).unwrap(), "n={n}");
        }
    }

    #[test]
    fn sigma_minus_one_known_values() {
        assert_eq!(sigma_minus_one(1).unwrap(), rat_int(1));
        assert_eq!(sigma_minus_one(4).unwrap(), rat(7, 4));
        assert_eq!(sigma_minus_one(6).unwrap(), rat_int(2));
        assert!(sigma_minus_one(0).is_err());
    }

    #[test]
    fn spec_ids_round_trip() {
        for id in [
            "geometric",
            "geometric:3/2",
            "constant:2",
            "sigma-shifted",
            "sigma",
            "custom:/tmp/x.txt",
        ] {
            let spec = SeriesSpec::parse(id).unwrap();
            assert_eq!(spec.id(), id, "id {id}");
            assert_eq!(SeriesSpec::parse(&spec.id()).unwrap(), spec);
        }
        // Non-canonical but valid input normalizes.
        assert_eq!(SeriesSpec::parse("constant:2/1").unwrap().id(), "constant:2");
        assert!(SeriesSpec::parse("geometric:1/2").is_err());
        assert!(SeriesSpec::parse("constant:0").is_err());
        assert!(SeriesSpec::parse("parabolic").is_err());
        assert!(SeriesSpec::parse("custom:").is_err());
    }

    #[test]
    fn generated_prefixes_match_hand_values() {
        let g = generate(&SeriesSpec::SigmaShifted, 3).unwrap();
        assert_eq!(
            g.coeffs(),
            &[rat_int(1), rat(3, 2), rat(4, 3), rat(7, 4)]
        );
        let f = generate(&SeriesSpec::Sigma, 3).unwrap();
        assert_eq!(
            f.coeffs(),
            &[rat_int(0), rat_int(1), rat(3, 2), rat(4, 3)]
        );
        let c = generate(&SeriesSpec::ConstantC { c: rat(7, 4) }, 2).unwrap();
        assert_eq!(c.coeffs(), &[rat(7, 4), rat(7, 4), rat(7, 4)]);
    }

    #[test]
    fn custom_files_parse_with_line_numbers() {
        let dir = std::env::temp_dir().join("lcpow-seq-test");
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.txt");
        std::fs::write(&good, "# header\n1\n\n3/2\n 4/3 \n7/4\n").unwrap();
        let f = generate(
            &SeriesSpec::CustomFile { path: good.clone() },
            3,
        )
        .unwrap();
        assert_eq!(f.coeffs(), &[rat_int(1), rat(3, 2), rat(4, 3), rat(7, 4)]);

        let bad = dir.join("bad.txt");
        std::fs::write(&bad, "1\n3/2\nbanana\n").unwrap();
        match generate(&SeriesSpec::CustomFile { path: bad }, 2) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }

        let neg = dir.join("neg.txt");
        std::fs::write(&neg, "1\n-3/2\n").unwrap();
        match generate(&SeriesSpec::CustomFile { path: neg }, 1) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }

        let short = dir.join("short.txt");
        std::fs::write(&short, "1\n2\n").unwrap();
        assert!(matches!(
            generate(&SeriesSpec::CustomFile { path: short }, 5),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn average_bound_matches_brute_force() {
        // Independent oracle: accumulate plain rationals and compare means
        // directly; the scan must agree on max, argmax, and first violation.
        let g = generate(&SeriesSpec::SigmaShifted, 120).unwrap();
        let bound = rat(8, 5);
        let report = check_average_bound(&g, &bound);

        let mut sum = Rat::from_integer(0.into());
        let mut best = (Rat::from_integer(0.into()), 0usize);
        let mut first = None;
        for (n, c) in g.coeffs().iter().enumerate() {
            sum += c;
            let mean = &sum / Rat::from_integer(crate::rat::Int::from(n as u64 + 1));
            if n == 0 || mean > best.0 {
                best = (mean.clone(), n);
            }
            if first.is_none() && mean > bound {
                first = Some(n);
            }
        }
        assert_eq!(report.max_average, best.0);
        assert_eq!(report.argmax, best.1);
        assert_eq!(report.first_violation, first);
        // The divisor-sum running mean first exceeds 8/5 within this window.
        assert!(first.is_some());
    }

    #[test]
    fn geometric_average_never_exceeds_one() {
        let f = generate(&SeriesSpec::Geometric { scale: Rat::one() }, 50).unwrap();
        let report = check_average_bound(&f, &Rat::one());
        assert_eq!(report.max_average, Rat::one());
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn constant_series_certifies_with_zero_deviation() {
        let c = rat(2, 1);
        let f = generate(&SeriesSpec::ConstantC { c: c.clone() }, 60).unwrap();
        let cert = certify_growth(&f, &c, &Rat::from_integer(0.into())).unwrap();
        assert_eq!(cert.d, Rat::from_integer(0.into()));
        // growth base (2/1)^(1/2) = sqrt(2) at alpha = 0.
        let base = cert.growth_base.unwrap();
        assert!((base.midpoint_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn low_c_fails_naming_first_offender() {
        // Divisor-sum running mean first exceeds 3/2 at n = 9 (hand check:
        // mean(8) = 33379/22680 < 3/2 < mean(9) = 37915/25200).
        let g = generate(&SeriesSpec::SigmaShifted, 40).unwrap();
        match certify_growth(&g, &rat(3, 2), &rat(1, 2)) {
            Err(Error::Certificate { first_offending_n }) => {
                assert_eq!(first_offending_n, 9)
            }
            other => panic!("expected certificate failure, got {other:?}"),
        }
        // And on the all-ones series, C = 1/2 fails immediately.
        let ones = TruncatedSeries::ones(5);
        assert!(matches!(
            certify_growth(&ones, &rat(1, 2), &rat(1, 2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn certificates_verify_and_tampering_is_caught() {
        let g = generate(&SeriesSpec::SigmaShifted, 200).unwrap();
        let cert = certify_growth(&g, &rat(17, 10), &rat(1, 10)).unwrap();
        let check = verify_certificate(&g, &cert).unwrap();
        assert!(check.holds);

        let mut tampered = cert.clone();
        tampered.d /= rat_int(1000);
        let check = verify_certificate(&g, &tampered).unwrap();
        assert!(!check.holds);
        assert!(check.first_offending_n.is_some());
    }

    #[test]
    fn growth_base_values_are_ordered_toward_eta0() {
        // Tightening (C, alpha) toward (pi^2/6, 0) pushes the base up:
        // 2^(2/5) < (9/4)^(5/11) < (17/7)^(10/21) < eta0.
        let g = generate(&SeriesSpec::SigmaShifted, 400).unwrap();
        let grid = [(rat(2, 1), rat(1, 2)), (rat(9, 5), rat(1, 5)), (rat(17, 10), rat(1, 10))];
        let mut last_hi = Float::with_val(64, 1);
        for (c, alpha) in grid {
            let cert = certify_growth(&g, &c, &alpha).unwrap();
            let base = cert.growth_base.unwrap();
            assert!(base.lo > last_hi, "grid must increase strictly");
            last_hi = base.hi;
        }
        let eta = crate::hiprec::eta0(128);
        assert!(last_hi < eta.lo);
    }

    #[test]
    fn partial_sum_bounds_hold_at_small_scale() {
        let report = sigma_partial_sum_bounds(2000, 256).unwrap();
        assert!(report.min_upper_margin > 0.0);
        assert!(report.min_lower_margin > 0.0);
        // The normalized upper gap ((pi^2/6)(n+1) - S_n)/(n+1) trends down
        // like log(n)/n, so its minimum sits in the upper part of the scan.
        assert!(report.min_upper_margin_at > 500, "at {}", report.min_upper_margin_at);
    }
}
