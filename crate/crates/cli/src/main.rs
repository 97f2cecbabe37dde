use clap::Parser;

fn main() {
    let cli = esl_cli::args::Cli::parse();
    std::process::exit(esl_cli::args::run(cli));
}
