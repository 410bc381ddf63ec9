//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "tanglesim.h"

int main(void) {
    TsParams *p = NULL;
    if (ts_params_new(50.0, 0.5, 1.0, &p) != TS_STATUS_OK) return 10;
    double d = 0.0;
    if (ts_confirmation_delay(p, TS_REGIME_LR, 50, &d) != TS_STATUS_OK || d != 98.0) return 11;
    double a = 0.0;
    if (ts_attack_success(0, 0, 0.7, &a) != TS_STATUS_OK || fabs(a - 3.0 / 7.0) > 1e-12) return 12;
    if (ts_confirmation_delay(p, TS_REGIME_LR, 1, &d) != TS_STATUS_INVALID_ARGUMENT) return 13;
    if (ts_last_error_message() == NULL) return 14;
    TsDistribution *dist = NULL;
    if (ts_h2lr_distribution(5, 10, &dist) != TS_STATUS_OK) return 15;
    double mean; uint32_t tips; uint64_t lo, hi;
    if (ts_distribution_summary(dist, &mean, &tips, &lo, &hi) != TS_STATUS_OK || tips != 5) return 16;
    ts_distribution_free(dist);
    ts_params_free(p);
    printf("ok %s\n", ts_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libtanglesim_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("ok {}", env!("CARGO_PKG_VERSION")));
}
