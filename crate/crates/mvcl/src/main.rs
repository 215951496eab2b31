fn main() {
    std::process::exit(mvcl::cli::main_with(std::env::args_os()));
}
