fn main() {
    std::process::exit(llcp::cli::main_with_args(std::env::args_os()));
}
