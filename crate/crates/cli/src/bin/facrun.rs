fn main() {
    std::process::exit(fac_cli::run_tool("facrun", std::env::args_os().collect()));
}
