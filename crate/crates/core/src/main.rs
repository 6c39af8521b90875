use voxattr::cli::{run, THREADS_ENV};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("voxattr: error: {THREADS_ENV} must be a positive integer, got {v:?}");
                std::process::exit(voxattr::cli::EXIT_USAGE);
            }
        }
    }
    std::process::exit(run(std::env::args_os()));
}
