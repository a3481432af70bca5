fn main() {
    std::process::exit(viscowave_cli::run_command(std::env::args_os()));
}
