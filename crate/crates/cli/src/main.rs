fn main() {
    std::process::exit(moran_pdmp_cli::run(std::env::args_os()));
}
