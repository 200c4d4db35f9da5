fn main() {
    std::process::exit(plurirank::run(std::env::args_os()));
}
