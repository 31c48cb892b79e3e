fn main() {
    std::process::exit(noisymem::cli::run_cli(std::env::args_os()));
}
