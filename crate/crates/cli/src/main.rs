fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = grasscomp::run(&argv) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
