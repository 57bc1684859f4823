fn main() {
    std::process::exit(stereo_qubo::cli::main_with_args(std::env::args_os()));
}
