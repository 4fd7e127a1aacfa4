use clap::Parser;
use tutor_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = tutor_cli::run(&cli) {
        eprintln!("tutorsim: {e}");
        std::process::exit(e.exit_code());
    }
}
