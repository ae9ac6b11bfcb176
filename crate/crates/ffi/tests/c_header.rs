//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

/// `cargo test` leaves the static library next to the test binary in
/// `target/<profile>/deps`; `cargo build` also copies it one level up.
fn find_staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps, deps.parent()?]
        .iter()
        .map(|d| d.join("libqftsim_ffi.a"))
        .find(|p| p.exists())
}

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "qftsim.h"

int main(void) {
    QftUnitary *u = NULL;
    QftDistribution *d = NULL;
    size_t input[4] = {1, 1, 1, 1};
    size_t occ[4];
    double p, total = 0.0, ratio;
    if (qft_fourier(4, &u) != QFT_OK) return 10;
    if (qft_quantum_distribution(u, input, 4, &d) != QFT_OK) return 11;
    if (qft_distribution_len(d) != 35) return 12;
    for (size_t i = 0; i < qft_distribution_len(d); ++i) {
        if (qft_distribution_get(d, i, occ, &p) != QFT_OK) return 13;
        total += p;
    }
    if (fabs(total - 1.0) > 1e-12) return 14;
    if (qft_violation_ratio(d, &ratio) != QFT_OK || ratio > 1e-12) return 15;
    if (qft_paper_circuit(5, &u) != QFT_ERR_UNSUPPORTED) return 16;
    printf("%s\n", qft_last_error());
    qft_distribution_free(d);
    qft_unitary_free(u);
    return 0;
}
"#;

#[test]
fn c_program_links_against_header() {
    let staticlib = find_staticlib().expect("libqftsim_ffi.a next to the test binary");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("probe.c");
    let exe = work.path().join("probe");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "probe exit {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("5 modes"), "{stdout}");
}
