fn main() -> std::process::ExitCode {
    igdetect::cli::run(std::env::args_os())
}
