fn main() {
    std::process::exit(sticky1d_cli::run_cli(std::env::args_os()));
}
