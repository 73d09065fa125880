fn main() {
    std::process::exit(kroncirc::cli::run(std::env::args_os()));
}
