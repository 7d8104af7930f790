use std::process::ExitCode;

fn main() -> ExitCode {
    makarov_cli::run()
}
