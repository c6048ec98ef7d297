use clap::Parser;

fn main() {
    let cli = badmm::cli::Cli::parse();
    std::process::exit(badmm::cli::run(cli));
}
