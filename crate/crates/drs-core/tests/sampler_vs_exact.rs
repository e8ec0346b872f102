//! Cross-validation of the two independent routes to the truncated law:
//! skip-sampling Monte Carlo against exact atom enumeration.

use drs_core::exact::AtomicDistribution;
use drs_core::numerics::RngStream;
use drs_core::sampler::{sample_batch, SeriesSampler};
use drs_core::series::SeriesParams;

/// Matches each sample to the nearest exact atom (samples are atom values
/// up to accumulation-order rounding) and compares the empirical law with
/// the exact one.
fn empirical_vs_exact(s: f64, beta: f64, n_trunc: u64, trials: usize, seed: u64) -> (f64, usize) {
    let params = SeriesParams::new(s, beta).unwrap();
    let dist = AtomicDistribution::enumerate(&params, n_trunc).unwrap();
    let atoms: Vec<(f64, f64)> = dist.atoms().collect();
    let sampler = SeriesSampler::new(&params, n_trunc).unwrap();
    let rng = RngStream::new(seed, 0);
    let values = sample_batch(&sampler, trials, &rng);

    let mut counts = vec![0u64; atoms.len()];
    for &v in &values {
        // nearest atom by binary search on the sorted values
        let idx = atoms.partition_point(|&(a, _)| a < v);
        let candidates = [idx.wrapping_sub(1), idx];
        let best = candidates
            .iter()
            .filter(|&&i| i < atoms.len())
            .min_by(|&&i, &&j| {
                (atoms[i].0 - v)
                    .abs()
                    .partial_cmp(&(atoms[j].0 - v).abs())
                    .unwrap()
            })
            .copied()
            .unwrap();
        assert!(
            (atoms[best].0 - v).abs() <= 1e-9,
            "sample {v} is not an atom value (nearest {})",
            atoms[best].0
        );
        counts[best] += 1;
    }

    // total variation distance between empirical and exact laws
    let tv = 0.5
        * atoms
            .iter()
            .zip(&counts)
            .map(|(&(_, p), &c)| (c as f64 / trials as f64 - p).abs())
            .sum::<f64>();

    // per-atom binomial 4-sigma check on the heaviest atoms
    let mut heavy: Vec<usize> = (0..atoms.len()).collect();
    heavy.sort_by(|&i, &j| atoms[j].1.partial_cmp(&atoms[i].1).unwrap());
    let mut violations = 0;
    for &i in heavy.iter().take(20) {
        let p = atoms[i].1;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        if (counts[i] as f64 / trials as f64 - p).abs() > 4.0 * sigma {
            violations += 1;
        }
    }
    (tv, violations)
}

#[test]
fn sampled_law_matches_enumeration_dense() {
    let (tv, violations) = empirical_vs_exact(1.0, 1.0, 10, 500_000, 90210);
    assert!(tv <= 0.012, "total variation {tv} too large");
    assert_eq!(violations, 0, "heavy atoms strayed beyond 4 sigma");
}

#[test]
fn sampled_law_matches_enumeration_sparse() {
    let (tv, violations) = empirical_vs_exact(2.0, 0.5, 10, 600_000, 1848);
    assert!(tv <= 0.02, "total variation {tv} too large");
    assert_eq!(violations, 0, "heavy atoms strayed beyond 4 sigma");
}

#[test]
fn sampled_moments_match_exact_moments() {
    let params = SeriesParams::new(1.0, 1.0).unwrap();
    let dist = AtomicDistribution::enumerate(&params, 14).unwrap();
    let exact_mean = dist.exact_moment(1);
    let exact_second = dist.exact_moment(2);
    let sampler = SeriesSampler::new(&params, 14).unwrap();
    let rng = RngStream::new(5150, 3);
    let trials = 400_000;
    let values = sample_batch(&sampler, trials, &rng);
    let mean = values.iter().sum::<f64>() / trials as f64;
    let second = values.iter().map(|&v| v * v).sum::<f64>() / trials as f64;
    // population sd of S and of S^2 from exact moments
    let var = exact_second - exact_mean * exact_mean;
    let fourth = dist.exact_moment(4);
    let var2 = fourth - exact_second * exact_second;
    let sd_mean = (var / trials as f64).sqrt();
    let sd_second = (var2 / trials as f64).sqrt();
    assert!(
        (mean - exact_mean).abs() <= 4.0 * sd_mean,
        "mean {mean} vs exact {exact_mean}"
    );
    assert!(
        (second - exact_second).abs() <= 4.0 * sd_second,
        "second moment {second} vs exact {exact_second}"
    );
}
