fn main() {
    std::process::exit(stickygas::run(std::env::args_os()));
}
