//! Compile and run a small C program against the committed header and
//! the built cdylib — proves the header matches the ABI.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "sparesim.h"

int main(void) {
    if (sparesim_abi_version() != 1) return 10;

    const char *json =
        "{\"criteria\":[\"a\",\"b\",\"c\"],"
        "\"matrix\":[[1,2,4],[0.5,1,2],[0.25,0.5,1]]}";
    sparesim_matrix *m = NULL;
    if (sparesim_matrix_from_json(json, &m) != SPARESIM_OK) return 11;
    if (sparesim_matrix_dim(m) != 3) return 12;

    double w[3];
    if (sparesim_matrix_weights(m, SPARESIM_WEIGHT_EIGENVECTOR, w, 3) != SPARESIM_OK)
        return 13;
    if (w[0] < 0.5714 || w[0] > 0.5715) return 14;

    sparesim_consistency report;
    if (sparesim_matrix_consistency(m, &report) != SPARESIM_OK) return 15;
    if (!report.acceptable) return 16;
    sparesim_matrix_free(m);

    /* error path: reciprocity violation must fail with a message */
    const char *bad =
        "{\"criteria\":[\"a\",\"b\"],\"matrix\":[[1,2],[0.4,1]]}";
    sparesim_matrix *m2 = NULL;
    if (sparesim_matrix_from_json(bad, &m2) == SPARESIM_OK) return 17;
    if (strlen(sparesim_last_error()) == 0) return 18;

    double values[6] = {4.0, 5.0, 6.0, 5.0, 7.0, 4.0};
    char *out = NULL;
    if (sparesim_fit_series(values, 6, &out) != SPARESIM_OK) return 19;
    if (out == NULL || strstr(out, "candidates") == NULL) return 20;
    sparesim_string_free(out);

    const char *request =
        "{\"policy\":{\"rop\":0,\"roq\":12},"
        "\"demand\":{\"kind\":\"constant_monthly\",\"qty\":1},"
        "\"lead\":{\"kind\":\"constant_months\",\"months\":0},"
        "\"costs\":{\"holding\":1.0,\"ordering\":5.0,\"shortage\":100.0},"
        "\"config\":{\"horizon_years\":1,\"initial_on_hand\":12,\"seed\":1},"
        "\"replications\":2}";
    char *stats = NULL;
    if (sparesim_simulate(request, &stats) != SPARESIM_OK) return 21;
    if (stats == NULL || strstr(stats, "total_cost") == NULL) return 22;
    sparesim_string_free(stats);

    puts("c header ok");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps; the cdylib sits one level up
    let mut exe = std::env::current_exe().unwrap();
    exe.pop(); // strip test binary name
    if exe.ends_with("deps") {
        exe.pop();
    }
    exe
}

#[test]
fn c_program_compiles_links_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok())
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler found; skipping header check");
        return;
    };

    // `cargo test` does not emit cdylib artifacts; build ours fresh so
    // the link sees current symbols. The build lock is free while tests
    // execute.
    let mut args = vec!["build", "-p", "sparesim-ffi"];
    if target_dir().ends_with("release") {
        args.push("--release");
    }
    let build = Command::new(env!("CARGO"))
        .args(&args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "cdylib build failed:\n{}",
        String::from_utf8_lossy(&build.stderr)
    );

    let lib_dir = target_dir();
    let lib = lib_dir.join("libsparesim_ffi.so");
    assert!(lib.exists(), "cdylib not built at {}", lib.display());

    let work = tempfile::tempdir().unwrap();
    let source = work.path().join("check.c");
    std::fs::write(&source, C_PROGRAM).unwrap();
    let binary = work.path().join("check");

    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let compile = Command::new(cc)
        .arg(&source)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lsparesim_ffi")
        .arg("-o")
        .arg(&binary)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "C program exited {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "c header ok");
}
