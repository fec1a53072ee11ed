fn main() {
    std::process::exit(cantorlab::cli::run(std::env::args_os()));
}
