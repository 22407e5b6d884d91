fn main() {
    std::process::exit(npt_tool::run(std::env::args_os()));
}
