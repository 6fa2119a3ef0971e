fn main() {
    std::process::exit(cgkit::cli::run(std::env::args_os()));
}
