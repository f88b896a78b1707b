fn main() {
    std::process::exit(tvlp::cli::main());
}
