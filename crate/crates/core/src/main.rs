fn main() {
    std::process::exit(twisted_wold::cli::run());
}
