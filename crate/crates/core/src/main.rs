fn main() {
    std::process::exit(hetcate::cli::main_with_args(std::env::args_os()));
}
