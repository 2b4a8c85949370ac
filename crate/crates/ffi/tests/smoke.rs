//! Exercises the C ABI end to end: handle lifecycles, string ownership,
//! status codes with messages, and a C compilation check of the generated
//! header.

use std::ffi::{CStr, CString};
use std::ptr;

use lcpow_ffi::*;

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    lcpow_string_free(p);
    s
}

#[test]
fn version_is_a_version() {
    let v = lcpow_version();
    assert!(!v.is_null());
    let text = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
    assert!(
        text.split('.').count() >= 2,
        "version {text:?} should be dotted"
    );
}

#[test]
fn series_and_table_roundtrip() {
    unsafe {
        let id = CString::new("geometric").unwrap();
        let mut series = ptr::null_mut();
        assert_eq!(lcpow_series_new(id.as_ptr(), 40, &mut series), Status::Ok);
        assert_eq!(lcpow_series_truncation(series), 40);

        let mut s = ptr::null_mut();
        assert_eq!(lcpow_series_coeff_str(series, 5, &mut s), Status::Ok);
        assert_eq!(take_string(s), "1/1");

        let mut table = ptr::null_mut();
        assert_eq!(lcpow_table_build(series, 3, 40, &mut table), Status::Ok);
        assert_eq!(lcpow_table_k_max(table), 3);
        assert_eq!(lcpow_table_n(table), 40);

        // 1/(1-q) to the power k has coefficients binom(n+k-1, k-1):
        // (k=2, n=5) gives binom(6,1) = 6 and (k=3, n=4) gives
        // binom(6,2) = 15.
        let mut c = ptr::null_mut();
        assert_eq!(lcpow_table_coeff_str(table, 2, 5, &mut c), Status::Ok);
        assert_eq!(take_string(c), "6/1");
        let mut c = ptr::null_mut();
        assert_eq!(lcpow_table_coeff_str(table, 3, 4, &mut c), Status::Ok);
        assert_eq!(take_string(c), "15/1");

        // Binomial rows are log-concave throughout: 41 coefficients give
        // 39 interior checks and no violation.
        let mut prefix = 0usize;
        let mut violation = 0i64;
        assert_eq!(
            lcpow_table_logconcave_prefix(table, 3, &mut prefix, &mut violation),
            Status::Ok
        );
        assert_eq!(prefix, 39);
        assert_eq!(violation, -1);

        let dir = std::env::temp_dir().join(format!("lcpow-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = CString::new(
            dir.join("geom-K3-N40.json").to_str().unwrap().to_string(),
        )
        .unwrap();
        assert_eq!(lcpow_table_save(table, path.as_ptr()), Status::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(lcpow_table_load(path.as_ptr(), &mut loaded), Status::Ok);
        assert_eq!(lcpow_table_k_max(loaded), 3);
        assert_eq!(lcpow_table_n(loaded), 40);
        let mut c = ptr::null_mut();
        assert_eq!(lcpow_table_coeff_str(loaded, 2, 5, &mut c), Status::Ok);
        assert_eq!(take_string(c), "6/1");

        lcpow_table_free(loaded);
        lcpow_table_free(table);
        lcpow_series_free(series);
        std::fs::remove_dir_all(&dir).ok();
    }
}

#[test]
fn failures_return_codes_and_messages() {
    unsafe {
        // Unknown series id: invalid argument with a message naming it.
        let id = CString::new("nonsense").unwrap();
        let mut series = ptr::null_mut();
        assert_eq!(
            lcpow_series_new(id.as_ptr(), 10, &mut series),
            Status::InvalidArg
        );
        let msg = take_string(lcpow_last_error_message());
        assert!(msg.contains("nonsense"), "{msg}");

        // Null arguments are their own status.
        assert_eq!(
            lcpow_series_new(ptr::null(), 10, &mut series),
            Status::NullArg
        );
        assert_eq!(
            lcpow_series_new(id.as_ptr(), 10, ptr::null_mut()),
            Status::NullArg
        );

        // Out-of-range index after a good build.
        let ok_id = CString::new("constant:2").unwrap();
        assert_eq!(lcpow_series_new(ok_id.as_ptr(), 10, &mut series), Status::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(
            lcpow_series_coeff_str(series, 11, &mut s),
            Status::InvalidArg
        );
        let msg = take_string(lcpow_last_error_message());
        assert!(msg.contains("11"), "{msg}");
        lcpow_series_free(series);

        // A 1 MiB budget cannot hold ten thousand polynomials.
        let mut qt = ptr::null_mut();
        assert_eq!(lcpow_qtable_build(10_000, 1, &mut qt), Status::Resource);
        let msg = take_string(lcpow_last_error_message());
        assert!(msg.contains("MiB"), "{msg}");
    }
}

#[test]
fn qtable_coefficients_through_the_boundary() {
    unsafe {
        let mut qt = ptr::null_mut();
        assert_eq!(lcpow_qtable_build(10, 0, &mut qt), Status::Ok);
        assert_eq!(lcpow_qtable_n_max(qt), 10);

        // Q_10(0) = p(10) = 42 and Q_2 = 2 + (5/2) z + (1/2) z^2.
        let mut c = ptr::null_mut();
        assert_eq!(lcpow_qtable_coeff_str(qt, 10, 0, &mut c), Status::Ok);
        assert_eq!(take_string(c), "42/1");
        let mut c = ptr::null_mut();
        assert_eq!(lcpow_qtable_coeff_str(qt, 2, 1, &mut c), Status::Ok);
        assert_eq!(take_string(c), "5/2");

        let mut c = ptr::null_mut();
        assert_eq!(
            lcpow_qtable_coeff_str(qt, 2, 3, &mut c),
            Status::InvalidArg,
            "degree of Q_2 is 2"
        );
        assert_eq!(
            lcpow_qtable_coeff_str(qt, 11, 0, &mut c),
            Status::InvalidArg
        );
        lcpow_qtable_free(qt);
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = which_cc();
    let Some(cc) = cc else {
        eprintln!("no C compiler on PATH; skipping the header compile check");
        return;
    };
    let manifest = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include").join("lcpow.h");
    assert!(header.exists(), "build.rs should have generated the header");
    let dir = std::env::temp_dir().join(format!("lcpow-hdr-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let main_c = dir.join("use_header.c");
    std::fs::write(
        &main_c,
        r#"#include <lcpow.h>
#include <stdio.h>

int main(void) {
    LcpowSeries *series = NULL;
    if (lcpow_series_new("geometric", 10, &series) != LCPOW_STATUS_OK) {
        return 1;
    }
    char *coeff = NULL;
    LcpowStatus status = lcpow_series_coeff_str(series, 3, &coeff);
    if (status == LCPOW_STATUS_OK) {
        printf("%s %s\n", lcpow_version(), coeff);
        lcpow_string_free(coeff);
    }
    lcpow_series_free(series);
    return status == LCPOW_STATUS_OK ? 0 : 1;
}
"#,
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&main_c)
        .output()
        .expect("compiler invocation");
    assert!(
        out.status.success(),
        "header failed to compile as C99:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::remove_dir_all(&dir).ok();
}

fn which_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|cc| {
        std::process::Command::new(cc)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    })
}
