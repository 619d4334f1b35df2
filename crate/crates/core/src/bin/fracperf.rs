fn main() {
    std::process::exit(fracperf::cli::run(std::env::args_os()));
}
