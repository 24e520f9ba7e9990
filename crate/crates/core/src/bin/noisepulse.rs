fn main() {
    let code = noisepulse::bench::cli::run(std::env::args_os(), std::env::var_os(noisepulse::bench::cli::OUT_ENV));
    std::process::exit(code);
}
