fn main() {
    std::process::exit(mepp_lab::cli::run(std::env::args_os()));
}
