//! Times the GBA and MDP backends over the shipped board corpus in both
//! liveness modes and prints the CSV.

use bp_liveness::experiment::{bench, default_corpus_dir, load_corpus, write_bench_csv};
use bp_liveness::ExploreLimits;

fn main() -> bp_liveness::Result<()> {
    let corpus = load_corpus(default_corpus_dir())?;
    write_bench_csv(
        &bench(&corpus, ExploreLimits::default())?,
        std::io::stdout(),
    )
}
