use clap::Parser;

fn main() {
    let cli = rtrw_cli::Cli::parse();
    std::process::exit(rtrw_cli::execute(&cli));
}
