fn main() {
    std::process::exit(mwaddr::cli::run());
}
