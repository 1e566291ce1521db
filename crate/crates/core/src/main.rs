fn main() {
    if let Ok(v) = std::env::var("MANIREG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MANIREG_THREADS must be a positive integer, got '{v}'");
                std::process::exit(2);
            }
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(manireg::harness::run_cli(&argv));
}
