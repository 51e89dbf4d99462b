fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = t4dt_cli::commands::main_with_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
