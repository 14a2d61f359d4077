fn main() {
    std::process::exit(dadal_cli::run(std::env::args_os()));
}
