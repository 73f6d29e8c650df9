fn main() -> std::process::ExitCode {
    hand_twin_cli::main_with(std::env::args_os())
}
