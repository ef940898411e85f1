fn main() {
    std::process::exit(lpg_cli::run(std::env::args_os()));
}
