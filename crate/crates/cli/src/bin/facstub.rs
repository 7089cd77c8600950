fn main() {
    std::process::exit(fac_cli::run_tool("facstub", std::env::args_os().collect()));
}
