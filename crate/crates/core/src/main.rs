fn main() {
    std::process::exit(dyadic_diffusion::cli::main())
}
