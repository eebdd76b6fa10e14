fn main() {
    std::process::exit(oseen_core::cli::main_with_args(std::env::args_os()));
}
