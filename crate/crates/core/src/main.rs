fn main() {
    std::process::exit(czkit::cli::main());
}
