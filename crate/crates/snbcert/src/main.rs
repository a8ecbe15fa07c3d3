fn main() {
    std::process::exit(snbcert::cli::main_with_args(std::env::args_os()));
}
