use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "coarse.h"
#include <stdio.h>

int main(void) {
    CoarsePartition *p = NULL;
    CoarseEstimatorConfig *cfg = NULL;
    double mu[1] = {0.37}, hat[1];
    size_t used = 0, dim = 0;
    if (coarse_partition_grid(1, 1.0, &p) != COARSE_STATUS_OK) return 1;
    if (coarse_partition_dim(p, &dim) != COARSE_STATUS_OK || dim != 1) return 1;
    if (coarse_estimator_config_new(0.1, 0.1, 0.5, 1.0, &cfg) != COARSE_STATUS_OK) return 1;
    coarse_estimator_config_set_boost_repeats(cfg, 3);
    CoarseStatus s = coarse_estimate_mean(p, mu, 1, cfg, 7, hat, &used);
    if (s != COARSE_STATUS_OK) { fprintf(stderr, "%s\n", coarse_last_error_message()); return 1; }
    CoarseVarianceRatio v;
    if (coarse_variance_ratio("laplace", -1.0, 1.0, 1000, 1, &v) != COARSE_STATUS_OK) return 1;
    CoarseVerdict verdict;
    if (coarse_identify(p, mu, 1, 100, 1, &verdict, NULL) != COARSE_STATUS_OK) return 1;
    coarse_estimator_config_free(cfg);
    coarse_partition_free(p);
    printf("%.6f %zu %s\n", hat[0], used, coarse_version());
    return 0;
}
"#;

#[test]
fn generated_header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("coarse.h").exists(), "header not generated");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use_header.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Wextra", "-Werror", "-fsyntax-only"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let deps = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = deps.join("libcoarse_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use_header.c");
    let exe = dir.path().join("use_header");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    let hat: f64 = fields[0].parse().unwrap();
    assert!((hat - 0.37).abs() < 0.1, "{text}");
    assert_eq!(fields[2], env!("CARGO_PKG_VERSION"));
}
