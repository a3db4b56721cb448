fn main() {
    std::process::exit(rfshadow_cli::main_impl());
}
