fn main() {
    std::process::exit(dwpt::cli::run(std::env::args_os()));
}
