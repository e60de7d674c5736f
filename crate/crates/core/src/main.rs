fn main() {
    std::process::exit(ifmap::cli::run_with_args(std::env::args_os()));
}
