fn main() {
    std::process::exit(oodkit_cli::run(std::env::args_os()));
}
