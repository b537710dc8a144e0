use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "wsi.h"

int main(void) {
    uint32_t gold[4] = {0, 0, 1, 1};
    uint32_t sys[4] = {0, 0, 0, 0};
    double p, r, f;
    if (wsi_b_cubed(gold, sys, 4, &p, &r, &f) != WSI_STATUS_OK) return 1;
    if (p != 0.5 || r != 1.0) return 2;
    double pts[8] = {0, 0, 0, 1, 10, 0, 10, 1};
    uint32_t labels[4];
    size_t k = 0;
    if (wsi_ag_silhouette(pts, 4, 2, 2, 15, labels, &k) != WSI_STATUS_OK || k != 2) return 3;
    if (wsi_ag_cluster(pts, 4, 2, 9, NULL, 0, labels) != WSI_STATUS_INVALID_ARGUMENT) return 4;
    printf("%s\n", wsi_last_error());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libwsi_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = std::env::temp_dir().join(format!("wsi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("k = 9"));
    std::fs::remove_dir_all(dir).unwrap();
}
