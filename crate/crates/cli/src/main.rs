fn main() {
    std::process::exit(cbmlab_cli::run(std::env::args_os()));
}
