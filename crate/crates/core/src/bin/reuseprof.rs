fn main() {
    std::process::exit(reuseprof::cli::main(std::env::args_os()));
}
