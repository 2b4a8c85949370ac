//! Exact checkers for log-concavity and strict unimodality of coefficient
//! sequences, the per-row breakpoint curve of a power table, and the
//! second-difference ratio criterion.
//!
//! Every comparison here is exact integer arithmetic: a reduced rational
//! a = p/q with q > 0 satisfies a_n^2 >= a_{n-1} a_{n+1} iff
//! p_n^2 q_{n-1} q_{n+1} >= p_{n-1} p_{n+1} q_n^2, so the checkers
//! cross-multiply and never reduce or round. Floating point appears only in
//! the least-squares fit diagnostics of the breakpoint curve, which are
//! descriptive, not part of any verdict.

use std::collections::BTreeMap;

use num_traits::Zero;
use rug::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::table::PowerTable;

/// Result of an exact log-concavity scan.
///
/// Indices refer to the input sequence: `scanned_up_to` is its last index N,
/// interior comparisons run over 1 <= n <= N-1, and `prefix_length` is the
/// largest L such that a_n^2 >= a_{n-1} a_{n+1} holds for all 1 <= n <= L.
/// The two derived fields are redundant by construction: `prefix_length` is
/// `first_violation - 1` when a violation exists and N-1 otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcavityReport {
    pub prefix_length: usize,
    pub first_violation: Option<usize>,
    pub scanned_up_to: usize,
}

/// Result of a strict unimodality check: rises strictly to a mode index M,
/// then falls strictly. Plateaus are offenses; (1, 2, 2, 1) fails at the
/// pair (1, 2) because neither 2 < 2 nor 2 > 2 holds. `mode_index` is set
/// exactly when `unimodal` is true, `first_offense` exactly when it is not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnimodalityReport {
    pub unimodal: bool,
    pub mode_index: Option<usize>,
    pub first_offense: Option<(usize, usize)>,
}

/// Least-squares line through the tracked points, with the count so readers
/// can judge how much data the slope rests on.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Per-row log-concavity prefix lengths L(k) of a power table, with fit
/// diagnostics for the two growth laws of interest: log L against k and
/// log L against k^(1/3).
///
/// A row is censored when its scan reached the truncation without finding a
/// violation; censored rows carry no information about where the prefix
/// actually ends, so they are excluded from the fits and listed separately.
/// Rows with L = 0 are likewise excluded (log 0 is undefined). Fits need at
/// least two usable points; otherwise they are `None`.
#[derive(Debug, Clone, Serialize)]
pub struct BreakpointCurve {
    pub scanned_up_to: usize,
    pub entries: BTreeMap<u32, usize>,
    pub censored: Vec<u32>,
    pub fit_log_l_vs_k: Option<LineFit>,
    pub fit_log_l_vs_k_cuberoot: Option<LineFit>,
}

/// The second-difference ratio a_{n-1} (a_{n+1} - 2 a_n + a_{n-1}) divided
/// by (a_n - a_{n-1})^2 at one interior index, plus its comparison against
/// the limit threshold (k-2)/(k-1).
///
/// The algebraic identity behind it: expanding both sides gives
/// (a_n - a_{n-1})^2 - a_{n-1} (a_{n+1} - 2 a_n + a_{n-1})
/// = a_n^2 - a_{n-1} a_{n+1}, so when the first difference is nonzero,
/// log-concavity at n is equivalent to ratio <= 1. When the first
/// difference is zero the ratio is undefined (`None`) and `holds_at_n`
/// reports the direct exact comparison instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioReport {
    pub n: usize,
    #[serde(serialize_with = "crate::rat::serde_rat_opt::serialize")]
    pub ratio: Option<Rat>,
    /// Exact verdict of a_n^2 >= a_{n-1} a_{n+1}, defined in every case.
    pub holds_at_n: bool,
    /// The threshold (k-2)/(k-1) the paper-scale analysis compares against.
    #[serde(serialize_with = "crate::rat::serde_rat::serialize")]
    pub threshold: Rat,
    /// Sign of ratio - threshold: -1 below, 0 equal, 1 above. `None` when
    /// the ratio is undefined.
    pub vs_threshold: Option<i8>,
}

fn assert_nonnegative_rats(seq: &[Rat]) {
    for (i, a) in seq.iter().enumerate() {
        assert!(
            a.numer().sign() != num_bigint::Sign::Minus,
            "log-concavity checks require non-negative entries, found {a} at index {i}"
        );
    }
}

/// Exact log-concavity scan of a rational sequence (length >= 3, entries
/// >= 0; both are contract violations and panic).
///
/// Leading zeros cannot cause violations: while a_{n-1} = 0 or a_n = 0 with
/// a_{n-1} = 0, the right-hand side a_{n-1} a_{n+1} is 0 and a_n^2 >= 0
/// holds, so a row of f^k with k leading zeros yields the same verdict as
/// the shifted row of (f/z)^k with every index moved down by k. The scan
/// therefore simply runs over all interior indices.
pub fn logconcave_prefix(seq: &[Rat]) -> ConcavityReport {
    assert!(seq.len() >= 3, "log-concavity scan needs at least 3 entries");
    assert_nonnegative_rats(seq);
    let last = seq.len() - 1;
    for n in 1..last {
        // p_n^2 q_{n-1} q_{n+1} >= p_{n-1} p_{n+1} q_n^2 with q > 0 is the
        // cross-multiplied form; no reduction, no rounding.
        let lhs = seq[n].numer() * seq[n].numer() * (seq[n - 1].denom() * seq[n + 1].denom());
        let rhs = seq[n - 1].numer() * seq[n + 1].numer() * (seq[n].denom() * seq[n].denom());
        if lhs < rhs {
            return ConcavityReport {
                prefix_length: n - 1,
                first_violation: Some(n),
                scanned_up_to: last,
            };
        }
    }
    ConcavityReport {
        prefix_length: last - 1,
        first_violation: None,
        scanned_up_to: last,
    }
}

/// Log-concavity scan for numerators over one common positive denominator,
/// as stored in a power-table row: the shared denominator squared cancels
/// from both sides, so only numerator products are compared. Avoids the
/// reduction cost of materializing rationals on rows whose common
/// denominator runs to thousands of bits.
pub fn logconcave_prefix_ints(nums: &[Integer]) -> ConcavityReport {
    assert!(nums.len() >= 3, "log-concavity scan needs at least 3 entries");
    for (i, v) in nums.iter().enumerate() {
        assert!(
            v.cmp0() != std::cmp::Ordering::Less,
            "log-concavity checks require non-negative entries, found {v} at index {i}"
        );
    }
    let last = nums.len() - 1;
    for n in 1..last {
        let lhs = Integer::from(&nums[n] * &nums[n]);
        let rhs = Integer::from(&nums[n - 1] * &nums[n + 1]);
        if lhs < rhs {
            return ConcavityReport {
                prefix_length: n - 1,
                first_violation: Some(n),
                scanned_up_to: last,
            };
        }
    }
    ConcavityReport {
        prefix_length: last - 1,
        first_violation: None,
        scanned_up_to: last,
    }
}

/// Strict unimodality per the definition: there exists M with
/// a_0 < a_1 < ... < a_M and a_M > a_{M+1} > ... > a_N. Length >= 1
/// required (panics on empty input). A single entry is unimodal with M = 0;
/// strictly monotone sequences are unimodal with the mode at the end that
/// the monotonicity points to.
pub fn unimodal_check(seq: &[Rat]) -> UnimodalityReport {
    assert!(!seq.is_empty(), "unimodality check needs at least 1 entry");
    let mut m = 0;
    while m + 1 < seq.len() && seq[m] < seq[m + 1] {
        m += 1;
    }
    for j in m..seq.len() - 1 {
        if seq[j] <= seq[j + 1] {
            return UnimodalityReport {
                unimodal: false,
                mode_index: None,
                first_offense: Some((j, j + 1)),
            };
        }
    }
    UnimodalityReport {
        unimodal: true,
        mode_index: Some(m),
        first_offense: None,
    }
}

/// Weak unimodality, for diagnostics only: non-strict rise to a plateau,
/// then non-strict fall. The reported mode is the last index of the initial
/// non-decreasing run, so (1, 2, 2, 1) is weakly unimodal with M = 2.
/// Verdicts never feed pass/fail records; the strict checker does.
pub fn unimodal_check_weak(seq: &[Rat]) -> UnimodalityReport {
    assert!(!seq.is_empty(), "unimodality check needs at least 1 entry");
    let mut m = 0;
    while m + 1 < seq.len() && seq[m] <= seq[m + 1] {
        m += 1;
    }
    for j in m..seq.len() - 1 {
        if seq[j] < seq[j + 1] {
            return UnimodalityReport {
                unimodal: false,
                mode_index: None,
                first_offense: Some((j, j + 1)),
            };
        }
    }
    UnimodalityReport {
        unimodal: true,
        mode_index: Some(m),
        first_offense: None,
    }
}

fn least_squares(points: &[(f64, f64)]) -> Option<LineFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    Some(LineFit {
        slope,
        intercept,
        points: points.len(),
    })
}

/// Measures the log-concavity prefix L(k) of every kept row k >= 1 of a
/// power table and fits log L against k and against k^(1/3). Row 0 is the
/// constant 1 and carries no information, so it never enters the curve.
///
/// Each entry is reproducible from the corresponding row: it is exactly
/// `logconcave_prefix_ints(&row.num).prefix_length`. When every row is
/// censored (no violation inside the truncation) the fits are `None`.
pub fn breakpoint_curve(table: &PowerTable) -> BreakpointCurve {
    let mut entries = BTreeMap::new();
    let mut censored = Vec::new();
    let mut pts_k = Vec::new();
    let mut pts_cbrt = Vec::new();
    for k in table.kept_rows() {
        if k == 0 {
            continue;
        }
        let row = table.row(k).expect("kept_rows listed this row");
        let report = logconcave_prefix_ints(&row.num);
        entries.insert(k, report.prefix_length);
        if report.first_violation.is_none() {
            censored.push(k);
        } else if report.prefix_length >= 1 {
            let y = (report.prefix_length as f64).ln();
            pts_k.push((k as f64, y));
            pts_cbrt.push(((k as f64).cbrt(), y));
        }
    }
    BreakpointCurve {
        scanned_up_to: table.n(),
        entries,
        censored,
        fit_log_l_vs_k: least_squares(&pts_k),
        fit_log_l_vs_k_cuberoot: least_squares(&pts_cbrt),
    }
}

/// Evaluates the second-difference ratio at interior index n of a row of
/// f^k, comparing against the threshold (k-2)/(k-1).
///
/// Errors: `Domain` when n is not interior (1 <= n <= len-2 required),
/// when the sequence is shorter than 3, or when k < 2 (the threshold has a
/// zero denominator at k = 1). A zero first difference is not an error: the
/// ratio is undefined and reported as `None`, with `holds_at_n` carrying
/// the direct exact verdict.
pub fn ratio_criterion(seq: &[Rat], k: u32, n: usize) -> Result<RatioReport> {
    if seq.len() < 3 {
        return Err(Error::Domain(format!(
            "ratio criterion needs at least 3 entries, got {}",
            seq.len()
        )));
    }
    if n < 1 || n > seq.len() - 2 {
        return Err(Error::Domain(format!(
            "ratio criterion index {n} outside interior range 1..={}",
            seq.len() - 2
        )));
    }
    if k < 2 {
        return Err(Error::Domain(format!(
            "ratio threshold (k-2)/(k-1) needs k >= 2, got {k}"
        )));
    }
    assert_nonnegative_rats(&seq[n - 1..=n + 1]);
    let threshold = Rat::new((i64::from(k) - 2).into(), (i64::from(k) - 1).into());
    let first_diff = &seq[n] - &seq[n - 1];
    let second_diff = &seq[n + 1] - &seq[n] - &first_diff;
    let holds_at_n = &seq[n] * &seq[n] >= &seq[n - 1] * &seq[n + 1];
    if first_diff.is_zero() {
        return Ok(RatioReport {
            n,
            ratio: None,
            holds_at_n,
            threshold,
            vs_threshold: None,
        });
    }
    let ratio = &seq[n - 1] * &second_diff / (&first_diff * &first_diff);
    let vs = match ratio.cmp(&threshold) {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    };
    Ok(RatioReport {
        n,
        ratio: Some(ratio),
        holds_at_n,
        threshold,
        vs_threshold: Some(vs),
    })
}

/// Convenience wrapper: `ratio_criterion` with the row taken from a power
/// table, so callers sampling many (k, n) pairs do not rebuild rationals.
pub fn ratio_criterion_row(table: &PowerTable, k: u32, n: usize) -> Result<RatioReport> {
    let row = table
        .row(k)
        .ok_or_else(|| Error::Domain(format!("row {k} was dropped at build time")))?;
    ratio_criterion(&row.to_rats(), k, n)
}
