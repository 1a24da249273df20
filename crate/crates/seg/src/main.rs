fn main() {
    std::process::exit(seg::cli::run(std::env::args_os()));
}
