//! Live-run rate of the Q*-compatible arbiter when Gaussian noise is added to
//! the exact Q values, per corpus board and noise level.

use bp_liveness::experiment::{
    default_corpus_dir, load_corpus, noise_experiment, write_noise_csv, NoiseConfig,
};
use bp_liveness::ExploreLimits;

fn main() -> bp_liveness::Result<()> {
    let cfg = NoiseConfig::default();
    let mut rows = Vec::new();
    for board in &load_corpus(default_corpus_dir())? {
        rows.extend(noise_experiment(board, &cfg, ExploreLimits::default())?);
    }
    write_noise_csv(&rows, std::io::stdout())
}
