fn main() {
    std::process::exit(fgrt::cli::run(std::env::args()));
}
