fn main() {
    std::process::exit(orderfit::cli::parse_and_dispatch(std::env::args_os()));
}
