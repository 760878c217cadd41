fn main() {
    std::process::exit(conflab_cli::run(std::env::args_os()));
}
