fn main() {
    std::process::exit(matineq::cli::run(std::env::args_os()));
}
