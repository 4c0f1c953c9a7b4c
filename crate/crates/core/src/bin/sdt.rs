fn main() {
    std::process::exit(sdt::cli::run(std::env::args_os()));
}
