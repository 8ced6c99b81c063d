fn main() {
    std::process::exit(focalmcc::cli::run(std::env::args_os()));
}
