fn main() -> std::process::ExitCode {
    let code = glueheat::cli::run(std::env::args_os());
    std::process::ExitCode::from(code.clamp(0, 255) as u8)
}
