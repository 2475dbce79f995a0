fn main() {
    std::process::exit(codeclean::cli::run_from_args(std::env::args_os()));
}
