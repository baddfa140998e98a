use clap::Parser;
use trajlab_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("E:{}:{}", e.code(), e.to_string().replace('\n', " "));
        std::process::exit(e.exit_code());
    }
}
