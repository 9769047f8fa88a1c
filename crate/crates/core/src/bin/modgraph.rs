fn main() -> std::process::ExitCode {
    modgraph::cli::main()
}
