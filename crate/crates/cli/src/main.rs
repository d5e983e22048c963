fn main() {
    std::process::exit(medcorpus_cli::run(std::env::args_os()));
}
