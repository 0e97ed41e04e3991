fn main() {
    std::process::exit(signwave::cli::main_from_env());
}
