fn main() {
    std::process::exit(birkhoff::cli::main());
}
