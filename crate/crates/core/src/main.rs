fn main() {
    std::process::exit(approach::cli::main_with_args(std::env::args_os()));
}
