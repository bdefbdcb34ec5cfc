fn main() {
    std::process::exit(stable_cir_cli::run(std::env::args_os()));
}
