use std::process::Command;

fn main() {
    // Best-effort build revision for the exported metadata; builds outside a
    // checkout fall back to "unknown".
    let rev = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string());
    println!("cargo:rustc-env=FCSIM_BUILD_REV={rev}");
}
