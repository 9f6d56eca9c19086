use clap::Parser;

use wcagfix_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let (result, err) = run(&cli);
    print!("{}", result.stdout);
    if let Some(e) = err {
        eprintln!("{e}");
    }
    std::process::exit(result.code);
}
