fn main() {
    std::process::exit(siq::cli::main());
}
