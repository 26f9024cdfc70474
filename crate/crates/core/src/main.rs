fn main() {
    std::process::exit(smoothfix::cli::main_with_args(std::env::args_os()));
}
