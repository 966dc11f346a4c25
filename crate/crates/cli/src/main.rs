fn main() {
    std::process::exit(margitron_cli::main_with_args(std::env::args_os()));
}
