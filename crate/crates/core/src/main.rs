fn main() {
    std::process::exit(clt_monotone::cli::run_from_args(std::env::args_os()));
}
