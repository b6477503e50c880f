fn main() {
    std::process::exit(hodge_vhs::cli::main_entry());
}
