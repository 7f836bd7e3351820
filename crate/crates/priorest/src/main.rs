use clap::Parser;
use priorest::cli::{out_dir, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRIOREST_LOG", "warn")).init();
    let cli = Cli::parse();
    let out = out_dir(&cli).map(|p| p.to_path_buf());
    let result = run(cli).and_then(|o| o.write(out.as_deref()));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
