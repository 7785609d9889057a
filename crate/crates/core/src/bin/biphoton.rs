use clap::Parser;

fn main() {
    let cli = biphoton::cli::Cli::parse();
    std::process::exit(biphoton::cli::main_with(cli));
}
