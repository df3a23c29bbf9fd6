fn main() {
    std::process::exit(dupsolve::cli::main_with_args(std::env::args_os()));
}
