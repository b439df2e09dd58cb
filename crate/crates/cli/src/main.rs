use clap::Parser;

fn main() {
    let args = plap_cli::cli::Args::parse();
    std::process::exit(plap_cli::cli::run(args));
}
