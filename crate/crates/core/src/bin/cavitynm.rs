fn main() {
    std::process::exit(cavitynm::cli::run());
}
