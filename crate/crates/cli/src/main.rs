fn main() {
    std::process::exit(gordonvar_cli::run(std::env::args_os()));
}
