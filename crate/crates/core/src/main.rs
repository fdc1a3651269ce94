use clap::Parser;

fn main() {
    let args = recpow::cli::Args::parse();
    std::process::exit(recpow::cli::main_with_args(args));
}
