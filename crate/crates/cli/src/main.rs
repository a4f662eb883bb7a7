fn main() {
    std::process::exit(kgprobe_cli::run(std::env::args_os()));
}
