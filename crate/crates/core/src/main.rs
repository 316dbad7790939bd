fn main() {
    std::process::exit(crowdnav::cli::run(std::env::args_os()));
}
