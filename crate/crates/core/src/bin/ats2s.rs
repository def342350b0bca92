fn main() {
    std::process::exit(ats2s::cli::run(std::env::args_os()));
}
