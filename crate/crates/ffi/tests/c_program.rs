//! Compiles a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_and_static_library_link_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = target_dir();
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "approxk-ffi", "--target-dir"])
        .arg(profile_dir.parent().unwrap())
        .status()
        .expect("cargo runs");
    assert!(built.success());
    let lib = profile_dir.join("libapproxk_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let out_dir = std::env::temp_dir().join(format!("approxk-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let exe = out_dir.join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let run = Command::new(&exe).env_remove("APPROXK_TOL").output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
