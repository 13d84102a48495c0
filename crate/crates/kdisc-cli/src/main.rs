mod args;
mod input;
mod run;
mod tokens;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    match run::execute(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
