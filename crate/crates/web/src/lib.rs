//! Browser bindings. Each function takes the JSON system config as text and
//! returns the same JSON result document the `latticerec` binary prints.

use wasm_bindgen::prelude::wasm_bindgen;

fn invoke(config: &str, args: &[&str]) -> String {
    let argv = std::iter::once("latticerec").chain(args.iter().copied());
    latticerec::cli::run(argv, &mut config.as_bytes()).stdout
}

/// Compatibility verdict with witnesses. Timed systems are checked over
/// `[t0, corner]`; empty strings select the defaults.
#[wasm_bindgen]
pub fn check(config: &str, t0: &str, corner: &str) -> String {
    let mut args = vec!["check"];
    if !t0.is_empty() {
        args.extend(["--t0", t0]);
    }
    if !corner.is_empty() {
        args.extend(["--corner", corner]);
    }
    invoke(config, &args)
}

/// Every state of the box `[t0, corner]`, row-major.
#[wasm_bindgen]
pub fn trace(config: &str, t0: &str, x0: &str, corner: &str, unsafe_incompatible: bool) -> String {
    let mut args = vec!["trace", "--x0", x0, "--corner", corner];
    if !t0.is_empty() {
        args.extend(["--t0", t0]);
    }
    if unsafe_incompatible {
        args.push("--unsafe-incompatible");
    }
    invoke(config, &args)
}

/// Endpoints of every monotone path from `t0` to `t`, grouped by value.
#[wasm_bindgen]
pub fn paths(config: &str, t0: &str, x0: &str, t: &str) -> String {
    let mut args = vec!["paths", "--x0", x0, "--t", t];
    if !t0.is_empty() {
        args.extend(["--t0", t0]);
    }
    invoke(config, &args)
}
