fn main() -> std::process::ExitCode {
    swi_core::cli::main()
}
