use std::io;

fn main() {
    let code = kakeya::cli::run(
        std::env::args_os(),
        &|k| std::env::var(k).ok(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
