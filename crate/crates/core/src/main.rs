fn main() {
    std::process::exit(skewform::cli::run(std::env::args_os()));
}
