fn main() {
    std::process::exit(beamtrack::cli::run(std::env::args_os()));
}
