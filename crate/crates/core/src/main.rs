fn main() {
    std::process::exit(vocalfold::cli::run(std::env::args_os()));
}
