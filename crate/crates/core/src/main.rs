fn main() {
    std::process::exit(hamtest::harness::run_cli(std::env::args()));
}
