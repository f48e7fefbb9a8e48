fn main() {
    std::process::exit(hpnedelec::cli::main_with_args(std::env::args_os()));
}
