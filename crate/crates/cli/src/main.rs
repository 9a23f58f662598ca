fn main() {
    std::process::exit(snac_cli::run(std::env::args_os()));
}
