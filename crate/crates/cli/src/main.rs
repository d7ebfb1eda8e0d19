fn main() {
    std::process::exit(echoscope_cli::run(std::env::args_os()));
}
