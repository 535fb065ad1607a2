use std::process::ExitCode;

fn main() -> ExitCode {
    physec_lora::cli::main()
}
