fn main() {
    std::process::exit(fw_srde_cli::run(std::env::args_os()));
}
