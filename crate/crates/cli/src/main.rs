use std::io::{self, IsTerminal};

fn main() {
    let color = io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none();
    let code = tradeoff_cli::run(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
        color,
    );
    std::process::exit(code);
}
