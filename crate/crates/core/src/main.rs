fn main() {
    std::process::exit(avsnn::cli::main_with_args(std::env::args_os()));
}
