fn main() {
    std::process::exit(fac_cli::dispatch(std::env::args_os()));
}
