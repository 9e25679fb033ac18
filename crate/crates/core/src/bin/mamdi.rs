fn main() -> std::process::ExitCode {
    mamdi::cli::main()
}
