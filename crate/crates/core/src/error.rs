use std::path::PathBuf;

/// Unified error type for the toolkit.
///
/// Exact-identity mismatches are not errors: operations that verify
/// identities return reports with a `fail` status instead, so a violation is
/// recorded rather than aborting a run. Errors are reserved for conditions
/// that prevent producing an answer at all.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A computation would exceed the memory budget. Names the offending
    /// table shape so the caller can shrink it.
    #[error("resource limit: {what} at K={k}, N={n} (estimated {estimate_mib} MiB, budget {budget_mib} MiB)")]
    Resource {
        what: String,
        k: usize,
        n: usize,
        estimate_mib: u64,
        budget_mib: u64,
    },

    /// Requested tolerance is unreachable at the current truncation or
    /// precision. `required_n` is the estimated truncation that would work;
    /// 0 means no finite truncation helps (raise precision instead).
    #[error("precision: {what} (estimated required truncation N={required_n})")]
    Precision { what: String, required_n: usize },

    /// Input file could not be parsed. Line numbers are 1-based.
    #[error("{path}: line {line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Arguments outside an operation's domain.
    #[error("domain: {0}")]
    Domain(String),

    /// A growth certificate could not be established.
    #[error("certificate failure: deviation C(n+1) - (a_0+...+a_n) is negative at n={first_offending_n}")]
    Certificate { first_offending_n: usize },

    /// Two independent computations of the same exact object disagree, so
    /// the computed object cannot be trusted. Unlike a lemma-verification
    /// finding (which is a report), this is an internal-consistency
    /// certificate failing.
    #[error("identity check failed: {what} at n={n}")]
    Identity { what: String, n: usize },

    /// Adaptive quadrature hit the subdivision limit before converging.
    #[error("quadrature did not converge within {max_subdivisions} subdivisions (worst panel estimate {worst_panel_estimate:e})")]
    Quadrature {
        max_subdivisions: usize,
        worst_panel_estimate: f64,
    },

    /// Continuous-argument tracking failed (modulus interval touched zero or
    /// the sampling grid was too coarse to keep phase steps below pi/2).
    #[error("argument branch tracking: {0}")]
    Branch(String),

    /// Cache file is unusable and the caller asked not to rebuild.
    #[error("cache: {0}")]
    Cache(String),

    /// Command-line usage error (reserved for conditions clap cannot express).
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
