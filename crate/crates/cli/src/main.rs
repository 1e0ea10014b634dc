fn main() {
    std::process::exit(qsplit_cli::run(std::env::args_os()));
}
