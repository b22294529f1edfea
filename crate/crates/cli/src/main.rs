fn main() {
    std::process::exit(shopfloor_cli::run(std::env::args_os()));
}
