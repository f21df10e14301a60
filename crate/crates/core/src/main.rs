use clap::Parser;

fn main() {
    let cli = rtn_echo_lab::cli::Cli::parse();
    std::process::exit(rtn_echo_lab::cli::run(cli));
}
