fn main() {
    std::process::exit(qpvsim::cli::main_with_args(std::env::args_os()));
}
