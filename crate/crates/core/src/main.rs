fn main() {
    std::process::exit(paidposter::cli::run(std::env::args_os()));
}
