use clap::Parser;

fn main() {
    let cli = dgauge::cli::Cli::parse();
    let code = dgauge::cli::execute(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
