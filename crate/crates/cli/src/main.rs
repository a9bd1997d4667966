fn main() {
    std::process::exit(ergobound_cli::run(std::env::args_os()));
}
