use clap::Parser;
use stacksim_gateway::cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        for line in &e.lines {
            eprintln!("error: {line}");
        }
        std::process::exit(e.code);
    }
}
