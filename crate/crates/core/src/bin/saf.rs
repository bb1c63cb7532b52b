fn main() -> std::process::ExitCode {
    saf::cli::main()
}
