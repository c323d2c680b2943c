use clap::Parser;
use graham_cli::cli::Cli;

fn configure_threads() {
    let Ok(raw) = std::env::var("GRAHAM_SEQ_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("ignoring GRAHAM_SEQ_THREADS={raw:?}: expected a positive integer"),
    }
}

fn main() {
    let cli = Cli::parse();
    configure_threads();
    let code = match graham_cli::commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
