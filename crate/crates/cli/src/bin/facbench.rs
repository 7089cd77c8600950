fn main() {
    std::process::exit(fac_cli::run_tool("facbench", std::env::args_os().collect()));
}
