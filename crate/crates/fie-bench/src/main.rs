use std::process::exit;

fn main() {
    exit(fie_bench::cli_main(std::env::args()));
}
