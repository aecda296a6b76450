fn main() -> std::process::ExitCode {
    beliefnet::cli::main()
}
