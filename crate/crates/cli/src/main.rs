fn main() {
    std::process::exit(cannings_lab::main_with_args(std::env::args_os()));
}
