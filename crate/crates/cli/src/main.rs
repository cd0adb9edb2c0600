fn main() {
    std::process::exit(ststore_cli::run(std::env::args_os()));
}
