fn main() -> std::process::ExitCode {
    mixlab::cli::main_with(std::env::args_os())
}
