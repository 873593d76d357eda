fn main() {
    std::process::exit(bgk_affine::cli::run(std::env::args_os()));
}
