fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(lepspace::cli::run_command(&argv));
}
