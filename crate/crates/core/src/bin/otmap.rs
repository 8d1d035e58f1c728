fn main() {
    std::process::exit(otmap::cli::main_with_args(std::env::args_os()));
}
