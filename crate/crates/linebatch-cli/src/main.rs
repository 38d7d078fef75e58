use linebatch_cli::{run, CliError};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(_) => {}
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
