fn main() -> std::process::ExitCode {
    windfield::cli::main_entry()
}
