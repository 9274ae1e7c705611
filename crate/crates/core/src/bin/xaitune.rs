fn main() {
    std::process::exit(xaitune::cli::main_with_args(std::env::args_os()));
}
