fn main() {
    std::process::exit(superquant_cli::app::main_with(std::env::args_os()));
}
