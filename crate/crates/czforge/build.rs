fn main() {
    // dense symmetric eigendecompositions go through LAPACK dsyevd
    println!("cargo:rustc-link-lib=dylib=openblas");
}
