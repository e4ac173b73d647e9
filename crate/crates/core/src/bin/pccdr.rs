fn main() {
    std::process::exit(pccdr::cli::run(std::env::args_os()));
}
