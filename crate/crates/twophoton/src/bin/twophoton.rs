fn main() {
    std::process::exit(twophoton::cli::run());
}
