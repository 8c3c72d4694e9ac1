fn main() {
    if let Some(threads) = std::env::var("GLMCF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    }
    std::process::exit(glmcf::cli::run(std::env::args_os()));
}
