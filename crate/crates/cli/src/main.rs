fn main() {
    std::process::exit(bgnn_cli::run(std::env::args_os()));
}
