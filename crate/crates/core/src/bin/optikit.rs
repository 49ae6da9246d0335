fn main() {
    std::process::exit(optikit::cli::main_with_args(std::env::args_os()));
}
