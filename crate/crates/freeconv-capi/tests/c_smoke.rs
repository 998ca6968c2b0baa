//! Compiles and runs a small C client against the committed header and the
//! produced static library, proving the ABI end to end: header names match
//! exported symbols, structs have the agreed layout, and the engine returns
//! correct numbers through the C surface.

use std::path::PathBuf;
use std::process::Command;

const CLIENT: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "freeconv.h"

static int check(int cond, const char *what) {
    if (!cond) {
        fprintf(stderr, "FAILED: %s (last error: %s)\n", what, fc_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    int bad = 0;
    FcMeasure *a = NULL, *b = NULL;
    bad |= check(fc_measure_semicircle(1.0, &a) == FC_STATUS_OK, "build semicircle a");
    bad |= check(fc_measure_semicircle(1.0, &b) == FC_STATUS_OK, "build semicircle b");
    if (bad) return 1;

    FcSupport sup;
    memset(&sup, 0, sizeof sup);
    bad |= check(fc_find_support(a, b, 1e-12, &sup) == FC_STATUS_OK, "find support");
    bad |= check(fabs(sup.e_plus - 2.0 * sqrt(2.0)) < 1e-8, "upper edge at 2 sqrt(2)");
    bad |= check(fabs(sup.e_minus + 2.0 * sqrt(2.0)) < 1e-8, "lower edge at -2 sqrt(2)");
    bad |= check(sup.edge_residuals[0] < 1e-8 && sup.edge_residuals[1] < 1e-8,
                 "edge certificate residuals");

    FcSubordination point;
    memset(&point, 0, sizeof point);
    FcComplex z = {0.0, 1.0};
    bad |= check(fc_solve_point(a, b, z, 1e-12, &point) == FC_STATUS_OK, "solve point");
    bad |= check(point.residual <= 1e-12, "subordination residual");
    bad |= check(point.omega_alpha.im >= 1.0, "omega maps up");

    FcDensity *d = NULL;
    bad |= check(fc_density_build(a, b, 33, 1e-8, 1e-12, &d) == FC_STATUS_OK, "build density");
    bad |= check(fc_density_len(d) == 33, "grid length");
    const double *x = fc_density_x(d);
    const double *rho = fc_density_rho(d);
    bad |= check(x != NULL && rho != NULL, "grid pointers");
    bad |= check(rho[0] == 0.0 && rho[32] == 0.0, "density vanishes at the edges");
    bad |= check(fabs(x[0] - sup.e_minus) < 1e-12, "grid starts at the lower edge");

    double mass = 0.0, mean = 0.0, var = 0.0;
    bad |= check(fc_density_moments(d, &mass, &mean, &var) == FC_STATUS_OK, "moments");
    bad |= check(fabs(mass - 1.0) < 1e-6, "unit mass");
    bad |= check(fabs(mean) < 1e-8, "zero mean");
    bad |= check(fabs(var - 2.0) < 1e-4, "additive variance");

    double half = 0.0;
    bad |= check(fc_density_cdf_at(d, 0.0, &half) == FC_STATUS_OK, "cdf at zero");
    /* coarse 33-point grid: cdf truncation is O(n^-3) */
    bad |= check(fabs(half - 0.5) < 1e-4, "median at zero");
    bad |= check(fc_density_cdf_at(d, 100.0, &half) == FC_STATUS_NUMERICS_ERROR,
                 "cdf outside the support errors");
    bad |= check(strlen(fc_last_error_message()) > 0, "error message is set");

    FcMeasure *bad_measure = NULL;
    bad |= check(fc_measure_semicircle(-1.0, &bad_measure) == FC_STATUS_SPEC_ERROR,
                 "negative variance rejected");
    bad |= check(bad_measure == NULL, "handle untouched on failure");

    fc_density_free(d);
    fc_measure_free(a);
    fc_measure_free(b);
    return bad;
}
"#;

#[test]
fn c_client_compiles_links_and_passes() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(
        include_dir.join("freeconv.h").exists(),
        "committed header missing"
    );

    // The staticlib is produced alongside the test binaries in the target
    // directory of the active profile.
    let target_root = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target_root.join(profile).join("libfreeconv_capi.a");
    assert!(lib.exists(), "staticlib not found at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("smoke.c");
    let binary = dir.path().join("smoke");
    std::fs::write(&source, CLIENT).unwrap();

    let compile = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Wextra")
        .arg("-Werror")
        .arg("-I")
        .arg(&include_dir)
        .arg(&source)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc should be runnable");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("client should run");
    assert!(
        run.status.success(),
        "C client failed:\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
}
