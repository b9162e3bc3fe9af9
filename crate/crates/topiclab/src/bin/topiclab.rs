use std::process::exit;

fn main() {
    exit(topiclab::cli::run(std::env::args_os()));
}
