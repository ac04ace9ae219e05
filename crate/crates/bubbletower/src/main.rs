use clap::Parser;

fn main() {
    let cli = bubbletower::cli::Cli::parse();
    std::process::exit(bubbletower::cli::run(&cli));
}
