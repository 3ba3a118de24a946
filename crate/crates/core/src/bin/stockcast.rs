use clap::Parser;

use stockcast::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        // One line, machine-parseable: error[<class>]: <message>
        let msg = e.to_string().replace('\n', "; ");
        eprintln!("error[{}]: {msg}", e.class());
        std::process::exit(exit_code(&e));
    }
}
