fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(levy_env::cli::run(&args));
}
