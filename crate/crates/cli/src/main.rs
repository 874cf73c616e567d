fn main() {
    eprintln!("uqrweb: not wired up yet");
    std::process::exit(4);
}
