fn main() {
    std::process::exit(fac_cli::run_tool(
        "facinspect",
        std::env::args_os().collect(),
    ));
}
