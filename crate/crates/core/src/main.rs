fn main() {
    std::process::exit(approxk::cli::main_with(std::env::args_os()));
}
