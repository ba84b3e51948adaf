fn main() {
    std::process::exit(pertvqe::cli::main_with_args(std::env::args_os()));
}
