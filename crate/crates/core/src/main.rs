fn main() {
    std::process::exit(sgncl::cli::run(std::env::args_os()));
}
