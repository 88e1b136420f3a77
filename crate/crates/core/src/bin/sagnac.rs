fn main() -> std::process::ExitCode {
    sagnac_pairs::cli::main_entry()
}
