fn main() -> std::process::ExitCode {
    ppm_cli::run(std::env::args_os())
}
