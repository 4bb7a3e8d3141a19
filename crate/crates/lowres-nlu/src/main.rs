fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(lowres_nlu::harness::cli::run(&args));
}
