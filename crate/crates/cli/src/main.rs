fn main() {
    std::process::exit(srm_cli::run(std::env::args_os()));
}
