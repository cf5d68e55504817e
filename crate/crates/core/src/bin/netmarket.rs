fn main() {
    std::process::exit(netmarket::cli::main_with_args(std::env::args_os()));
}
