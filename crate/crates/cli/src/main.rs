fn main() {
    std::process::exit(translab_cli::main_with_args(std::env::args_os()));
}
