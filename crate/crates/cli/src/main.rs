fn main() {
    std::process::exit(segsynth::run(std::env::args_os()));
}
