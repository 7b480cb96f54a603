fn main() {
    std::process::exit(tomo_cli::cli::main_entry());
}
