fn main() {
    std::process::exit(nsbh_cli::run(std::env::args_os()));
}
