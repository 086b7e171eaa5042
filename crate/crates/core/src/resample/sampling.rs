use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::history::CaptureHistory;
use crate::table::CountTable;

/// Multinomial resample with `N_total` trials and cell probabilities
/// proportional to the observed counts.
///
/// Drawn as a chain of conditional binomials over the support in canonical
/// order.
pub fn resample<R: Rng + ?Sized>(table: &CountTable, rng: &mut R) -> CountTable {
    let mut remaining_n = table.n_total();
    let mut remaining_w = table.n_total();
    let mut out = Vec::with_capacity(table.support_len());
    for (h, c) in table.iter() {
        if remaining_n == 0 {
            break;
        }
        let draw = if c == remaining_w {
            remaining_n
        } else {
            let p = c as f64 / remaining_w as f64;
            Binomial::new(remaining_n, p)
                .expect("probability in [0, 1]")
                .sample(rng)
        };
        out.push((h, draw));
        remaining_n -= draw;
        remaining_w -= c;
    }
    CountTable::new(table.t(), out).expect("resample keeps a valid table")
}

/// RNG stream for replicate `index` under `seed`; independent of how
/// replicates are scheduled across threads.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The `index`-th bootstrap replicate of `table` under `seed`.
pub fn replicate(table: &CountTable, seed: u64, index: u64) -> CountTable {
    resample(table, &mut replicate_rng(seed, index))
}

/// Leave-one-case-out tables: one per positive cell, with that count
/// decremented.
pub fn jackknife_tables(table: &CountTable) -> Vec<(CaptureHistory, CountTable)> {
    table
        .support()
        .into_iter()
        .map(|h| (h, table.decremented(h).expect("support cell is positive")))
        .collect()
}
