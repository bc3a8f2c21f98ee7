fn main() -> std::process::ExitCode {
    xy_entropy::cli::main_entry()
}
