fn main() -> std::process::ExitCode {
    vietspell::cli::main()
}
