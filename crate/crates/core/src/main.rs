fn main() {
    std::process::exit(ringsim::cli::run(std::env::args_os()));
}
