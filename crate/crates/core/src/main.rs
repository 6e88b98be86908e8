fn main() {
    std::process::exit(nca_pathfind::cli::run_cli(std::env::args_os()));
}
