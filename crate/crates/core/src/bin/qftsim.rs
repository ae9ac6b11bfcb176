fn main() -> std::process::ExitCode {
    qftsim::cli::main_entry()
}
