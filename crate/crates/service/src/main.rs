use std::io::{self, BufReader};

use watson_service::cli::{run, Io};

fn main() {
    let stdin = io::stdin();
    let mut io = Io {
        stdin: &mut BufReader::new(stdin.lock()),
        stdout: &mut io::stdout(),
        stderr: &mut io::stderr(),
    };
    std::process::exit(run(std::env::args_os(), &mut io));
}
