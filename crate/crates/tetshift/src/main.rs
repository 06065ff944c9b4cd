fn main() {
    std::process::exit(tetshift::cli::run());
}
