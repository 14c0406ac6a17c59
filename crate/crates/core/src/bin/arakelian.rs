fn main() {
    std::process::exit(arakelian::cli::main_with(std::env::args_os()));
}
