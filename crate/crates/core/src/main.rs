fn main() {
    std::process::exit(harris_kinetics::cli::run(std::env::args_os()));
}
