use std::process::ExitCode;

fn main() -> ExitCode {
    polyel::cli::main()
}
