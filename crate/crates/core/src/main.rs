fn main() {
    std::process::exit(lensbeam::cli::main_with_args(std::env::args_os()));
}
