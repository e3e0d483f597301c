fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(distfdr::expharness::cli::run(&args));
}
