fn main() {
    std::process::exit(convexset_cli::run(std::env::args_os()));
}
