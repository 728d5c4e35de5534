fn main() -> std::process::ExitCode {
    frenet_wrap::cli::main()
}
