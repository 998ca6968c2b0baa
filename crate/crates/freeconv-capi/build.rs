fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR is set");
    // Keep the committed header in sync with the source on every build;
    // write_to_file leaves the file untouched when nothing changed, so this
    // does not cause rebuild loops.
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(std::path::Path::new(&crate_dir).join("include/freeconv.h"));
        }
        Err(e) => println!("cargo:warning=C header generation failed: {e}"),
    }
}
