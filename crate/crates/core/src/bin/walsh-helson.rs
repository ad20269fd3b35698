fn main() {
    std::process::exit(walsh_helson::cli::run(std::env::args_os()));
}
