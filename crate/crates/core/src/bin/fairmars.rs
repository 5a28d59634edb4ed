fn main() {
    std::process::exit(fairmars::cli::run(std::env::args_os()));
}
