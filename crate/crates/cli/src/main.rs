use std::process::ExitCode;

fn main() -> ExitCode {
    triplerank_cli::run()
}
