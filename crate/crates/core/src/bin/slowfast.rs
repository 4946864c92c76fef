fn main() {
    std::process::exit(slowfast::cli::main_with_args(std::env::args_os()));
}
