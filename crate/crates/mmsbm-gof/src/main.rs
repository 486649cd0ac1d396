fn main() {
    if let Err(e) = mmsbm_gof::cli::run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
