fn main() {
    std::process::exit(fac_cli::run_tool("facc", std::env::args_os().collect()));
}
