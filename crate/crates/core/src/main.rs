use clap::Parser;

fn main() {
    let cli = ffthom::cli::Cli::parse();
    std::process::exit(ffthom::cli::run(&cli));
}
