fn main() {
    std::process::exit(sri::cli::main());
}
