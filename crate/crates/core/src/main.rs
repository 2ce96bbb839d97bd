fn main() {
    std::process::exit(gdkit::cli::main());
}
