//! Seeded random streams. Every replication gets its own ChaCha stream, so
//! results do not depend on the order replications run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for replication `stream` under `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replication `rep` of grid scenario `scenario`.
pub fn grid_stream(scenario: usize, rep: usize) -> u64 {
    ((scenario as u64 + 1) << 32) | rep as u64
}

/// Map `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order always follows the input.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
