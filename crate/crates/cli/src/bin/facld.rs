fn main() {
    std::process::exit(fac_cli::run_tool("facld", std::env::args_os().collect()));
}
