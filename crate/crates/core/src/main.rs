fn main() {
    std::process::exit(chdyn::cli::cli_main(std::env::args_os()));
}
