use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Shuffles `items` with a seeded RNG and cuts it into three parts whose
/// sizes follow `ratios` by largest remainder.
pub fn split_dataset<T: Clone>(
    items: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidInput(format!("split ratios must be non-negative: {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("split ratios sum to {total}, not 1")));
    }
    let n = items.len();
    let sizes = largest_remainder(n, &ratios);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let take = |range: std::ops::Range<usize>| -> Vec<T> {
        order[range].iter().map(|&i| items[i].clone()).collect()
    };
    let (a, b) = (sizes[0], sizes[0] + sizes[1]);
    Ok((take(0..a), take(a..b), take(b..n)))
}

fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| (q + 1e-9).floor() as usize);
    let mut left = n.saturating_sub(sizes.iter().sum());
    let mut by_remainder = [0usize, 1, 2];
    by_remainder.sort_by(|&i, &j| {
        let ri = quotas[i] - sizes[i] as f64;
        let rj = quotas[j] - sizes[j] as f64;
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in by_remainder.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[i] > 0.0 {
            sizes[i] += 1;
            left -= 1;
        }
    }
    sizes
}
