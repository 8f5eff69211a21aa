use clap::Parser;

fn main() {
    let cli = ccv::cli::Cli::parse();
    std::process::exit(ccv::cli::run(cli));
}
