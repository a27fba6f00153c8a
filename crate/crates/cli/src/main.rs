fn main() {
    std::process::exit(mbvp_cli::run_command(std::env::args_os()));
}
