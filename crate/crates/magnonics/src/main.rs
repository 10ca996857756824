fn main() {
    std::process::exit(magnonics::cli::run(std::env::args()));
}
