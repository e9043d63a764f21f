use qpk_cli::commands;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let outcome = commands::run(&args);
    print!("{}", outcome.output);
    std::process::exit(outcome.exit);
}
