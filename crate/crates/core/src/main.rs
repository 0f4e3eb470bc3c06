fn main() -> std::process::ExitCode {
    episim::cli::run()
}
