fn main() {
    std::process::exit(granular_spacetime::cli::run(std::env::args()));
}
