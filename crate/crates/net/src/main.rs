fn main() {
    let code = qid_net::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
