mod config;
mod parse;

use std::env;
use std::process;

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("usage: calc <expr>");
        process::exit(2);
    }
    let expr = args.join(" ");
    match parse::tokenize(&expr) {
        Ok(tokens) => println!("{}", parse::eval(&tokens)),
        Err(e) => {
            eprintln!("bad number: {e}");
            process::exit(1);
        }
    }
}
