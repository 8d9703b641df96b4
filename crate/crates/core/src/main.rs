fn main() {
    std::process::exit(oscrit::cli::run(std::env::args_os()));
}
