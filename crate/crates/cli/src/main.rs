fn main() {
    std::process::exit(linqubit_cli::run(std::env::args_os()));
}
