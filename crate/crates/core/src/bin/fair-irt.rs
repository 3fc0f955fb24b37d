fn main() {
    std::process::exit(fair_irt::cli::main_with_args(std::env::args_os()));
}
