fn main() {
    std::process::exit(sqg_cli::run(std::env::args_os()));
}
