fn main() {
    std::process::exit(magflow_cli::run(std::env::args_os()));
}
