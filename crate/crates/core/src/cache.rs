//! Disk cache of power tables, keyed by series id, K, N, and table format
//! version.
//!
//! The key is the file name: `{sanitized-series-id}-K{K}-N{N}-v{ver}.json`.
//! A hit must really be the requested object, so after loading, the header
//! fields are checked against the request; any mismatch (renamed file,
//! truncation, format drift) downgrades to a rebuild with a warning rather
//! than an error, because the cache is an accelerator, never an authority.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;
use crate::table::{PowerTable, FORMAT_VERSION};

/// File-name-safe form of a series id: alphanumerics, `.`, `_`, `-` pass
/// through, everything else (`:`, `/`, spaces) becomes `_`. Collisions
/// are tolerable because the loaded header still carries the exact id.
pub fn sanitize_id(series_id: &str) -> String {
    series_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn cache_file_name(series_id: &str, k_max: u32, n: usize) -> String {
    format!(
        "{}-K{k_max}-N{n}-v{FORMAT_VERSION}.json",
        sanitize_id(series_id)
    )
}

/// Result of a cache lookup-or-build.
#[derive(Debug)]
pub struct CacheOutcome {
    pub table: PowerTable,
    pub path: PathBuf,
    /// True when the table came from disk without recomputation.
    pub hit: bool,
    /// Set when a file existed but could not be used as-is.
    pub warning: Option<String>,
}

/// Loads the table for (series_id, k_max, n) from `dir`, or builds it from
/// `f` and persists it. A corrupt or mismatched file is rebuilt in place.
pub fn load_or_build(
    dir: &Path,
    f: &TruncatedSeries,
    series_id: &str,
    k_max: u32,
    n: usize,
    budget_mib: Option<u64>,
) -> Result<CacheOutcome> {
    fs::create_dir_all(dir)?;
    let path = dir.join(cache_file_name(series_id, k_max, n));
    let mut warning = None;

    if path.exists() {
        match PowerTable::load(&path) {
            Ok(table) => {
                if table.series_id() == series_id && table.k_max() == k_max && table.n() == n {
                    return Ok(CacheOutcome {
                        table,
                        path,
                        hit: true,
                        warning: None,
                    });
                }
                warning = Some(format!(
                    "{}: header ({}, K={}, N={}) does not match the request \
                     ({series_id}, K={k_max}, N={n}); rebuilding",
                    path.display(),
                    table.series_id(),
                    table.k_max(),
                    table.n()
                ));
            }
            Err(Error::Cache(msg)) => {
                warning = Some(format!("corrupt cache file, rebuilding: {msg}"));
            }
            Err(other) => return Err(other),
        }
    }

    let table = PowerTable::build_selected(f, series_id, k_max, n, None, budget_mib)?;
    table.save(&path)?;
    Ok(CacheOutcome {
        table,
        path,
        hit: false,
        warning,
    })
}

/// One listed cache file. Fields come from the file name, so `series_id`
/// is the sanitized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheEntry {
    pub file_name: String,
    pub series_id: String,
    pub k_max: u32,
    pub n: usize,
    pub format_version: u32,
    pub bytes: u64,
}

/// Parses `{id}-K{k}-N{n}-v{ver}.json`; the id itself may contain dashes,
/// so the three trailing tagged segments are peeled from the right.
fn parse_cache_name(name: &str) -> Option<(String, u32, usize, u32)> {
    let stem = name.strip_suffix(".json")?;
    let (rest, ver) = stem.rsplit_once("-v")?;
    let (rest, n) = rest.rsplit_once("-N")?;
    let (id, k) = rest.rsplit_once("-K")?;
    if id.is_empty() {
        return None;
    }
    Some((
        id.to_string(),
        k.parse().ok()?,
        n.parse().ok()?,
        ver.parse().ok()?,
    ))
}

/// Lists cache-shaped files in `dir`, sorted by file name. Foreign files
/// are ignored. A missing directory lists as empty.
pub fn cache_ls(dir: &Path) -> Result<Vec<CacheEntry>> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let file_name = entry.file_name().to_string_lossy().into_owned();
        if let Some((series_id, k_max, n, format_version)) = parse_cache_name(&file_name) {
            out.push(CacheEntry {
                file_name,
                series_id,
                k_max,
                n,
                format_version,
                bytes: entry.metadata()?.len(),
            });
        }
    }
    out.sort_by(|a, b| a.file_name.cmp(&b.file_name));
    Ok(out)
}

/// Removes cache files: the one named `name` when given, otherwise every
/// cache-shaped file. Returns how many were deleted. Removing a named file
/// that is absent is an error; bulk removal of an empty cache is zero.
pub fn cache_rm(dir: &Path, name: Option<&str>) -> Result<usize> {
    match name {
        Some(name) => {
            if parse_cache_name(name).is_none() {
                return Err(Error::Usage(format!(
                    "{name} is not a cache file name (expected {{id}}-K{{k}}-N{{n}}-v{{ver}}.json)"
                )));
            }
            let path = dir.join(name);
            if !path.exists() {
                return Err(Error::Cache(format!("{} does not exist", path.display())));
            }
            fs::remove_file(&path)?;
            Ok(1)
        }
        None => {
            let entries = cache_ls(dir)?;
            for e in &entries {
                fs::remove_file(dir.join(&e.file_name))?;
            }
            Ok(entries.len())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{generate, SeriesSpec};

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("lcpow-cache-{name}-{}", std::process::id()));
        fs::remove_dir_all(&dir).ok();
        dir
    }

    fn geometric(n: usize) -> TruncatedSeries {
        generate(&SeriesSpec::parse("geometric").unwrap(), n).unwrap()
    }

    #[test]
    fn file_names_are_sanitized_and_parse_back() {
        assert_eq!(
            cache_file_name("geometric", 3, 40),
            format!("geometric-K3-N40-v{FORMAT_VERSION}.json")
        );
        let odd = cache_file_name("custom:/tmp/f.json", 2, 10);
        assert!(!odd.contains('/'));
        assert!(!odd.contains(':'));
        let (id, k, n, v) = parse_cache_name(&odd).unwrap();
        assert_eq!(id, "custom__tmp_f.json");
        assert_eq!((k, n, v), (2, 10, FORMAT_VERSION));
        // An id containing dashes survives the right-to-left peel.
        let dashed = cache_file_name("sigma-shifted", 12, 500);
        assert_eq!(
            parse_cache_name(&dashed).unwrap().0,
            "sigma-shifted".to_string()
        );
        assert_eq!(parse_cache_name("notacache.json"), None);
        assert_eq!(parse_cache_name("x-K2-N10-v1.txt"), None);
    }

    #[test]
    fn build_then_hit_then_corrupt_then_rebuild() {
        let dir = tmp("roundtrip");
        let f = geometric(40);

        let first = load_or_build(&dir, &f, "geometric", 3, 40, None).unwrap();
        assert!(!first.hit);
        assert!(first.warning.is_none());
        assert!(first.path.exists());

        let second = load_or_build(&dir, &f, "geometric", 3, 40, None).unwrap();
        assert!(second.hit);
        assert!(second.warning.is_none());
        assert_eq!(
            second.table.coeff(3, 39),
            first.table.coeff(3, 39),
            "hit must reproduce the built table"
        );

        // Truncated file: rebuilt with a warning, then hits again.
        fs::write(&first.path, "{\"format_version\": 1").unwrap();
        let third = load_or_build(&dir, &f, "geometric", 3, 40, None).unwrap();
        assert!(!third.hit);
        assert!(third.warning.as_ref().unwrap().contains("corrupt"));
        let fourth = load_or_build(&dir, &f, "geometric", 3, 40, None).unwrap();
        assert!(fourth.hit);

        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn mismatched_header_is_rebuilt_with_warning() {
        let dir = tmp("mismatch");
        let f = geometric(40);
        let built = load_or_build(&dir, &f, "geometric", 2, 40, None).unwrap();
        // A renamed file claims to be K=3 but its header says K=2.
        let lying = dir.join(cache_file_name("geometric", 3, 40));
        fs::rename(&built.path, &lying).unwrap();
        let out = load_or_build(&dir, &f, "geometric", 3, 40, None).unwrap();
        assert!(!out.hit);
        assert!(out.warning.as_ref().unwrap().contains("does not match"));
        assert_eq!(out.table.k_max(), 3);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ls_and_rm() {
        let dir = tmp("lsrm");
        assert_eq!(cache_ls(&dir).unwrap(), vec![]);
        let f = geometric(20);
        load_or_build(&dir, &f, "geometric", 2, 20, None).unwrap();
        load_or_build(&dir, &f, "geometric", 3, 20, None).unwrap();
        fs::write(dir.join("unrelated.txt"), "x").unwrap();

        let listing = cache_ls(&dir).unwrap();
        assert_eq!(listing.len(), 2, "foreign files are not listed");
        assert_eq!(listing[0].series_id, "geometric");
        assert_eq!(listing[0].k_max, 2);
        assert!(listing[0].bytes > 0);

        assert_eq!(
            cache_rm(&dir, Some(listing[0].file_name.as_str())).unwrap(),
            1
        );
        assert!(cache_rm(&dir, Some(listing[0].file_name.as_str())).is_err());
        assert!(cache_rm(&dir, Some("unrelated.txt")).is_err());
        assert_eq!(cache_rm(&dir, None).unwrap(), 1);
        assert_eq!(cache_ls(&dir).unwrap(), vec![]);
        assert!(dir.join("unrelated.txt").exists());
        fs::remove_dir_all(&dir).ok();
    }
}
