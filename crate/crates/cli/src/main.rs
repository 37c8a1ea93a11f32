use clap::error::ErrorKind;
use clap::Parser;

use mgbench::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; everything else is a
            // configuration error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = mgbench::run(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
