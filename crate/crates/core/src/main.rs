fn main() {
    std::process::exit(optoloss::cli::run(std::env::args_os()));
}
