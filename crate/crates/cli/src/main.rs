use clap::Parser;

fn main() {
    let args = pcfsqueeze_cli::Args::parse();
    std::process::exit(pcfsqueeze_cli::main_with(args));
}
