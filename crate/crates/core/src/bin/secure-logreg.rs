fn main() {
    std::process::exit(secure_logreg::cli::main_with_args(std::env::args_os()));
}
