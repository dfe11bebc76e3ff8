fn main() {
    std::process::exit(mwpar::cli::run(std::env::args_os()));
}
