use clap::Parser;

fn main() {
    let cli = qbd_manet_cli::cli::Cli::parse();
    if let Err(err) = qbd_manet_cli::dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
