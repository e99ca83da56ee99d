fn main() {
    std::process::exit(tip_core::cli::dispatch(std::env::args_os()));
}
