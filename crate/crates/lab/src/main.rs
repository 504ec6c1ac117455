use clap::Parser;
use fredholm_lab::args::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    std::process::exit(fredholm_lab::execute(&cli));
}
