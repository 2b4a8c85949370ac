//! Exact coefficient tables of powers of a series.
//!
//! Row k of a `PowerTable` holds the coefficients of f^k up to a common
//! truncation order N. Rows are built by convolving row k-1 with the base
//! row, so each row is exact, and every row shares the denominator D^k where
//! D is the common denominator of the base coefficients. Comparisons inside
//! a row therefore reduce to integer comparisons of numerators.

use std::path::Path;

use rug::ops::Pow;
use rug::{Complete, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastconv;
use crate::rat::{format_rat, int_to_rug, parse_rat, rug_to_rat, Rat};
use crate::series::TruncatedSeries;
use num_traits::Signed;

/// Version stamp for the on-disk table format.
pub const FORMAT_VERSION: u32 = 1;

/// Default build budget. Estimated table bytes above this abort the build
/// before any large allocation happens.
pub const DEFAULT_MEMORY_BUDGET_MIB: u64 = 3072;

/// One table row over a shared denominator: coefficient n is num[n]/den.
/// Numerators are not reduced; keeping the row on one denominator lets
/// log-concavity and residual checks cross-multiply without any gcds.
#[derive(Debug, Clone)]
pub struct IntRow {
    pub num: Vec<Integer>,
    pub den: Integer,
}

impl IntRow {
    /// Reduced rational value of coefficient n.
    pub fn coeff_rat(&self, n: usize) -> Rat {
        rug_to_rat(&rug::Rational::from((
            self.num[n].clone(),
            self.den.clone(),
        )))
    }

    /// The whole row as reduced rationals.
    pub fn to_rats(&self) -> Vec<Rat> {
        (0..self.num.len()).map(|n| self.coeff_rat(n)).collect()
    }
}

/// Exact table of the powers f^1..f^K truncated at order N. Rows can be
/// dropped at build time to bound memory; dropped rows read back as `None`.
#[derive(Debug)]
pub struct PowerTable {
    series_id: String,
    k_max: u32,
    n: usize,
    rows: Vec<Option<IntRow>>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    format_version: u32,
    series_id: String,
    k: u32,
    n: usize,
    rows: Vec<Vec<String>>,
}

impl PowerTable {
    /// Builds the full table of rows 1..=k_max.
    pub fn build(f: &TruncatedSeries, series_id: &str, k_max: u32, n: usize) -> Result<Self> {
        Self::build_selected(f, series_id, k_max, n, None, None)
    }

    /// Builds the table keeping only the rows listed in `keep` (all rows when
    /// `None`). Intermediate rows are still computed, because row k needs
    /// row k-1, but they are released immediately.
    pub fn build_selected(
        f: &TruncatedSeries,
        series_id: &str,
        k_max: u32,
        n: usize,
        keep: Option<&[u32]>,
        budget_mib: Option<u64>,
    ) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Domain(
                "power table needs K >= 1 (the k = 0 row is identically 1)".into(),
            ));
        }
        if n > f.truncation_order() {
            return Err(Error::Domain(format!(
                "table order N={n} exceeds the base truncation {}",
                f.truncation_order()
            )));
        }

        // Base row on a common denominator: num1[i] / den1 = a_i exactly.
        let mut den1 = Integer::from(1);
        for c in &f.coeffs()[..=n] {
            den1.lcm_mut(&int_to_rug(c.denom()));
        }
        let num1: Vec<Integer> = f.coeffs()[..=n]
            .iter()
            .map(|c| int_to_rug(c.numer()) * den1.div_exact_ref(&int_to_rug(c.denom())).complete())
            .collect();

        let budget = budget_mib.unwrap_or(DEFAULT_MEMORY_BUDGET_MIB);
        let estimate = Self::estimate_mib(&num1, k_max, n, keep);
        if estimate > budget {
            return Err(Error::Resource {
                what: "power table".into(),
                k: k_max as usize,
                n,
                estimate_mib: estimate,
                budget_mib: budget,
            });
        }

        let keep_row = |k: u32| keep.map_or(true, |ks| ks.contains(&k));
        let mut rows: Vec<Option<IntRow>> = (0..=k_max).map(|_| None).collect();
        let mut prev = num1.clone();
        for k in 1..=k_max {
            if k > 1 {
                prev = fastconv::conv(&prev, &num1, n);
            }
            if keep_row(k) {
                let den = (&den1).pow(k).complete();
                let num = if k == k_max {
                    std::mem::take(&mut prev)
                } else {
                    prev.clone()
                };
                rows[k as usize] = Some(IntRow { num, den });
            }
        }

        Ok(PowerTable {
            series_id: series_id.to_string(),
            k_max,
            n,
            rows,
        })
    }

    /// Upper estimate of resident bytes, in MiB. Row k numerators carry at
    /// most k * (base bits + log2(N+1) + 1) bits each; two transient rows of
    /// the deepest size live during the build.
    fn estimate_mib(num1: &[Integer], k_max: u32, n: usize, keep: Option<&[u32]>) -> u64 {
        let base_bits = num1
            .iter()
            .map(|x| x.significant_bits() as u128)
            .max()
            .unwrap_or(1)
            .max(1);
        let log_n = (usize::BITS - (n + 1).leading_zeros()) as u128;
        let per_level = base_bits + log_n + 1;
        let entry_overhead = 32u128;
        let row_bytes = |k: u32| (n as u128 + 1) * (k as u128 * per_level / 8 + entry_overhead);
        let mut total = 2 * row_bytes(k_max);
        for k in 1..=k_max {
            if keep.map_or(true, |ks| ks.contains(&k)) {
                total += row_bytes(k);
            }
        }
        (total >> 20) as u64
    }

    pub fn series_id(&self) -> &str {
        &self.series_id
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row k, or `None` when it was dropped at build time. k = 0 is not
    /// stored (it is identically the series 1).
    pub fn row(&self, k: u32) -> Option<&IntRow> {
        self.rows.get(k as usize).and_then(|r| r.as_ref())
    }

    /// Reduced coefficient of z^n in f^k. Panics when row k was dropped.
    pub fn coeff(&self, k: u32, n: usize) -> Rat {
        self.row(k)
            .unwrap_or_else(|| panic!("row {k} was dropped at build time"))
            .coeff_rat(n)
    }

    /// Row k as reduced rationals. Panics when row k was dropped.
    pub fn row_rats(&self, k: u32) -> Vec<Rat> {
        self.row(k)
            .unwrap_or_else(|| panic!("row {k} was dropped at build time"))
            .to_rats()
    }

    pub fn kept_rows(&self) -> Vec<u32> {
        (1..=self.k_max)
            .filter(|&k| self.rows[k as usize].is_some())
            .collect()
    }

    pub fn is_full(&self) -> bool {
        self.kept_rows().len() == self.k_max as usize
    }

    /// Serializes the table as JSON with reduced "p/q" coefficient strings.
    /// Only full tables are cached; partial tables would make a later load
    /// silently weaker than a rebuild.
    pub fn save(&self, path: &Path) -> Result<()> {
        if !self.is_full() {
            return Err(Error::Cache(
                "refusing to save a partial table (some rows were dropped at build time)".into(),
            ));
        }
        let file = TableFile {
            format_version: FORMAT_VERSION,
            series_id: self.series_id.clone(),
            k: self.k_max,
            n: self.n,
            rows: (1..=self.k_max)
                .map(|k| self.row_rats(k).iter().map(format_rat).collect())
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads a table saved by `save`, validating shape and coefficient
    /// syntax. Any mismatch is a cache error; callers decide whether to
    /// rebuild.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: TableFile = serde_json::from_str(&text)
            .map_err(|e| Error::Cache(format!("{}: not a table file: {e}", path.display())))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Cache(format!(
                "{}: format version {} (supported: {FORMAT_VERSION})",
                path.display(),
                file.format_version
            )));
        }
        if file.rows.len() != file.k as usize {
            return Err(Error::Cache(format!(
                "{}: {} rows for K={}",
                path.display(),
                file.rows.len(),
                file.k
            )));
        }
        let mut rows: Vec<Option<IntRow>> = vec![None];
        for (i, row) in file.rows.iter().enumerate() {
            if row.len() != file.n + 1 {
                return Err(Error::Cache(format!(
                    "{}: row {} has {} entries for N={}",
                    path.display(),
                    i + 1,
                    row.len(),
                    file.n
                )));
            }
            let mut rats = Vec::with_capacity(row.len());
            for s in row {
                let r = parse_rat(s).map_err(|e| {
                    Error::Cache(format!("{}: row {}: {e}", path.display(), i + 1))
                })?;
                if r.is_negative() {
                    return Err(Error::Cache(format!(
                        "{}: row {}: negative coefficient {s}",
                        path.display(),
                        i + 1
                    )));
                }
                rats.push(r);
            }
            let mut den = Integer::from(1);
            for r in &rats {
                den.lcm_mut(&int_to_rug(r.denom()));
            }
            let num = rats
                .iter()
                .map(|r| {
                    int_to_rug(r.numer())
                        * den.div_exact_ref(&int_to_rug(r.denom())).complete()
                })
                .collect();
            rows.push(Some(IntRow { num, den }));
        }
        Ok(PowerTable {
            series_id: file.series_id,
            k_max: file.k,
            n: file.n,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use crate::series::{series_pow, shift_up};

    fn sigma_shifted(n: usize) -> TruncatedSeries {
        // a_m = sigma_1(m+1)/(m+1), computed here by trial divisor sums so the
        // table test does not depend on the sequences module.
        let coeffs = (0..=n)
            .map(|m| {
                let v = (m + 1) as i64;
                let s: i64 = (1..=v).filter(|d| v % d == 0).sum();
                rat(s, v)
            })
            .collect();
        TruncatedSeries::new(coeffs)
    }

    #[test]
    fn geometric_table_is_pascal() {
        let t = PowerTable::build(&TruncatedSeries::ones(2), "geometric", 3, 2).unwrap();
        let expect = [vec![1i64, 1, 1], vec![1, 2, 3], vec![1, 3, 6]];
        for (k, row) in expect.iter().enumerate() {
            let got = t.row_rats(k as u32 + 1);
            let want: Vec<Rat> = row.iter().map(|&x| rat_int(x)).collect();
            assert_eq!(got, want, "k={}", k + 1);
        }
    }

    #[test]
    fn chain_matches_binary_exponentiation() {
        // The table builds f^k by repeated convolution; series_pow squares.
        // Agreement across the two routes checks both.
        let g = sigma_shifted(40);
        let t = PowerTable::build(&g, "sigma-shifted", 4, 40).unwrap();
        for k in 1..=4u32 {
            assert_eq!(t.row_rats(k), series_pow(&g, k, 40).coeffs().to_vec());
        }
        assert_eq!(t.coeff(2, 2), rat(59, 12));
    }

    #[test]
    fn leading_zeros_propagate_through_rows() {
        let f = shift_up(&sigma_shifted(8), 1);
        let t = PowerTable::build(&f, "sigma", 3, 9).unwrap();
        for k in 1..=3u32 {
            let row = t.row_rats(k);
            for (i, c) in row.iter().take(k as usize).enumerate() {
                assert_eq!(c, &Rat::from_integer(0.into()), "k={k} i={i}");
            }
            assert_eq!(row[k as usize], rat_int(1));
        }
    }

    #[test]
    fn keep_filter_drops_rows_but_keeps_values() {
        let t = PowerTable::build_selected(
            &TruncatedSeries::ones(30),
            "geometric",
            7,
            30,
            Some(&[2, 4, 7]),
            None,
        )
        .unwrap();
        assert_eq!(t.kept_rows(), vec![2, 4, 7]);
        assert!(t.row(3).is_none());
        assert!(!t.is_full());
        for &k in &[2u32, 4, 7] {
            for n in 0..=30usize {
                let expect = crate::rat::binomial((n as u64) + (k as u64) - 1, (k as u64) - 1);
                assert_eq!(t.coeff(k, n), Rat::from_integer(expect), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn oversized_build_is_rejected_up_front() {
        let f = TruncatedSeries::ones(200_000);
        let err = PowerTable::build(&f, "geometric", 50_000, 200_000).unwrap_err();
        match err {
            Error::Resource { k, n, estimate_mib, budget_mib, .. } => {
                assert_eq!((k, n), (50_000, 200_000));
                assert!(estimate_mib > budget_mib);
            }
            other => panic!("expected resource error, got {other}"),
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("lcpow-table-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.json");

        let g = sigma_shifted(12);
        let t = PowerTable::build(&g, "sigma-shifted", 5, 12).unwrap();
        t.save(&path).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();

        let loaded = PowerTable::load(&path).unwrap();
        assert_eq!(loaded.series_id(), "sigma-shifted");
        for k in 1..=5u32 {
            assert_eq!(loaded.row_rats(k), t.row_rats(k), "k={k}");
        }
        loaded.save(&path).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn load_rejects_malformed_files() {
        let dir = std::env::temp_dir().join("lcpow-table-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corrupt.json");

        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(PowerTable::load(&path), Err(Error::Cache(_))));

        std::fs::write(
            &path,
            r#"{"format_version":1,"series_id":"x","k":2,"n":1,"rows":[["1/1","1/1"]]}"#,
        )
        .unwrap();
        assert!(matches!(PowerTable::load(&path), Err(Error::Cache(_))));

        std::fs::write(
            &path,
            r#"{"format_version":1,"series_id":"x","k":1,"n":1,"rows":[["1/1","-2/1"]]}"#,
        )
        .unwrap();
        assert!(matches!(PowerTable::load(&path), Err(Error::Cache(_))));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn partial_tables_refuse_to_save() {
        let t = PowerTable::build_selected(
            &TruncatedSeries::ones(5),
            "geometric",
            3,
            5,
            Some(&[3]),
            None,
        )
        .unwrap();
        let path = std::env::temp_dir().join("lcpow-partial.json");
        assert!(matches!(t.save(&path), Err(Error::Cache(_))));
    }
}
