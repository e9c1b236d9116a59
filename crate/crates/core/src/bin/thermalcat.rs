fn main() {
    std::process::exit(thermalcat::cli::main_with_args(std::env::args_os()));
}
