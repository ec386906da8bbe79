use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = match cknet_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { cknet_cli::exit::CONFIG } else { cknet_cli::exit::OK };
            return code.into();
        }
    };
    cknet_cli::main_with(cli).into()
}
