fn main() {
    std::process::exit(uavcomp_cli::run(std::env::args_os()));
}
