//! Generates the C header for the FFI surface with cbindgen. The header is
//! written both into OUT_DIR and into include/ so downstream builds can
//! pick it up without running cargo.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    let out_dir = PathBuf::from(env::var("OUT_DIR").expect("out dir"));

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen generates the header");
    bindings.write_to_file(out_dir.join("countdown.h"));

    let include_dir = crate_dir.join("include");
    std::fs::create_dir_all(&include_dir).expect("create include dir");
    bindings.write_to_file(include_dir.join("countdown.h"));
}
