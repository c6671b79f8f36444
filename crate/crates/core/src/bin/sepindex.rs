fn main() {
    std::process::exit(sepindex::cli::run_from_args(std::env::args_os()));
}
