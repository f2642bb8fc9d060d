fn main() {
    std::process::exit(pseudobridge::cli::run(std::env::args_os()));
}
