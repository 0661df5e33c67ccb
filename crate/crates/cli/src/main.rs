use clap::Parser;

fn main() {
    sep2m_cli::init_logging();
    let code = sep2m_cli::run(sep2m_cli::Cli::parse());
    std::process::exit(code);
}
