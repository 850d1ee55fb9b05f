fn main() {
    unilayout::cli::init_logging();
    std::process::exit(unilayout::cli::run(std::env::args_os()));
}
