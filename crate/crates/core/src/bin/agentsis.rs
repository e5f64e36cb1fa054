fn main() {
    std::process::exit(agentsis::cli::run(std::env::args_os()));
}
