fn main() {
    std::process::exit(rhls_cli::run_command(std::env::args_os()));
}
