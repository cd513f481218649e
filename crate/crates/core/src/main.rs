fn main() {
    std::process::exit(cocycle_kam::cli::run(std::env::args_os()));
}
