fn main() {
    std::process::exit(c1ext::cli::main())
}
