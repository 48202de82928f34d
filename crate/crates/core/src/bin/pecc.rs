fn main() { std::process::exit(pecc_core::cli::main()) }
