fn main() {
    std::process::exit(hmm_spde::cli::run_cli(std::env::args_os()));
}
