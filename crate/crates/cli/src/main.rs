fn main() {
    std::process::exit(condensa::cli::main_with_args(std::env::args_os()));
}
