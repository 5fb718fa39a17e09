fn main() {
    std::process::exit(countable_ifs::cli::run());
}
