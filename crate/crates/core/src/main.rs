fn main() {
    std::process::exit(edgecache::cli::main());
}
