fn main() {
    std::process::exit(floodpass::cli::main_with(std::env::args_os()));
}
