fn main() {
    std::process::exit(vulnreach::cli::run(std::env::args_os()));
}
