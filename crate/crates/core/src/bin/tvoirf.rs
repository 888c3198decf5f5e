fn main() {
    std::process::exit(tvoirf::cli::main_with_args(std::env::args_os()));
}
