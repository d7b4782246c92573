//! Chi-squared goodness-of-fit tests for integer samplers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Expected count every merged cell must reach.
pub const MIN_EXPECTED: f64 = 5.0;
/// Fewer merged cells than this switches to the pair-cell test.
pub const MIN_CELLS: usize = 20;

/// A law on the integers given by its masses on `start..start+probs.len()`
/// and the total mass on either side.
#[derive(Clone, Debug)]
pub struct DiscreteLaw {
    pub start: i64,
    pub probs: Vec<f64>,
    pub below: f64,
    pub above: f64,
}

impl DiscreteLaw {
    pub fn end(&self) -> i64 {
        self.start + self.probs.len() as i64
    }

    /// Cell index: 0 is "below", then one cell per atom, then "above".
    fn raw_cell(&self, x: i64) -> usize {
        if x < self.start {
            0
        } else if x >= self.end() {
            self.probs.len() + 1
        } else {
            (x - self.start) as usize + 1
        }
    }

    fn raw_probs(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.probs.len() + 2);
        v.push(self.below);
        v.extend_from_slice(&self.probs);
        v.push(self.above);
        v
    }
}

#[derive(Clone, Debug)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub p_value: f64,
    pub cells: usize,
    /// Cells were formed from consecutive sample pairs.
    pub paired: bool,
    pub pass: bool,
}

/// Groups adjacent raw cells so that each group has probability at least
/// `min_p`; a short final group is folded into its neighbour.
/// Returns the group index of every raw cell.
fn merge(probs: &[f64], min_p: f64) -> (Vec<usize>, Vec<f64>) {
    let mut map = Vec::with_capacity(probs.len());
    let mut groups: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for &p in probs {
        map.push(groups.len());
        acc += p;
        if acc >= min_p {
            groups.push(acc);
            acc = 0.0;
        }
    }
    if acc > 0.0 || groups.is_empty() {
        if groups.is_empty() {
            groups.push(acc);
        } else {
            let last = groups.len() - 1;
            groups[last] += acc;
            for g in map.iter_mut() {
                if *g > last {
                    *g = last;
                }
            }
        }
    }
    (map, groups)
}

fn finish(
    observed: &[u64],
    probs: &[f64],
    n: f64,
    sig: f64,
    paired: bool,
) -> Result<ChiSquareResult> {
    if observed.len() < 2 {
        return Err(Error::Domain(
            "goodness-of-fit needs at least two cells".into(),
        ));
    }
    let statistic = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let critical = law.inverse_cdf(1.0 - sig);
    let p_value = law.sf(statistic);
    Ok(ChiSquareResult {
        statistic,
        dof,
        critical,
        p_value,
        cells: observed.len(),
        paired,
        pass: statistic <= critical,
    })
}

/// Pearson's test of `samples` against `law` at significance `sig`.
///
/// Adjacent atoms are merged until every cell expects at least five
/// samples. If that leaves fewer than [`MIN_CELLS`] cells, consecutive
/// samples are paired and the test runs on the product cells, which also
/// checks independence of successive draws.
pub fn chi_square(samples: &[i64], law: &DiscreteLaw, sig: f64) -> Result<ChiSquareResult> {
    if !(sig > 0.0 && sig < 1.0) {
        return Err(Error::Domain(format!(
            "significance must lie in (0, 1), got {sig}"
        )));
    }
    let raw = law.raw_probs();
    let n = samples.len() as f64;
    let (map, groups) = merge(&raw, MIN_EXPECTED / n);
    if groups.len() >= MIN_CELLS {
        let mut obs = vec![0u64; groups.len()];
        for &x in samples {
            obs[map[law.raw_cell(x)]] += 1;
        }
        return finish(&obs, &groups, n, sig, false);
    }
    let pairs = samples.len() / 2;
    let np = pairs as f64;
    let (map, groups) = merge(&raw, (MIN_EXPECTED / np).sqrt());
    let g = groups.len();
    let mut obs = vec![0u64; g * g];
    for c in samples.chunks_exact(2) {
        obs[map[law.raw_cell(c[0])] * g + map[law.raw_cell(c[1])]] += 1;
    }
    let probs: Vec<f64> = groups
        .iter()
        .flat_map(|a| groups.iter().map(move |b| a * b))
        .collect();
    finish(&obs, &probs, np, sig, true)
}

/// `z` standard deviations of a binomial proportion.
pub fn binomial_band(p: f64, n: f64, z: f64) -> f64 {
    z * (p * (1.0 - p) / n).sqrt()
}

/// Empirical quantile by nearest rank.
pub fn quantile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn geometric_law(q: f64, len: usize) -> DiscreteLaw {
        let probs: Vec<f64> = (0..len).map(|k| (1.0 - q) * q.powi(k as i32)).collect();
        DiscreteLaw {
            start: 0,
            probs,
            below: 0.0,
            above: q.powi(len as i32),
        }
    }

    fn draw(n: usize, q: f64, seed: u64) -> Vec<i64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut k = 0;
                while rng.gen::<f64>() < q {
                    k += 1;
                }
                k
            })
            .collect()
    }

    #[test]
    fn merging_respects_threshold() {
        let (map, groups) = merge(&[0.001, 0.3, 0.3, 0.001, 0.001, 0.397], 0.1);
        assert_eq!(groups.len(), 3);
        assert_eq!(map, vec![0, 0, 1, 2, 2, 2]);
        assert!((groups.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (map, groups) = merge(&[0.5, 0.49, 0.01], 0.1);
        assert_eq!(groups.len(), 2);
        assert_eq!(map, vec![0, 1, 1]);
    }

    #[test]
    fn accepts_true_law_rejects_wrong_one() {
        let s = draw(200_000, 0.8, 1);
        let r = chi_square(&s, &geometric_law(0.8, 60), 1e-3).unwrap();
        assert!(!r.paired && r.cells >= MIN_CELLS && r.pass, "{r:?}");
        let r = chi_square(&s, &geometric_law(0.79, 60), 1e-3).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn low_support_uses_pairs() {
        let s = draw(200_000, 0.3, 2);
        let r = chi_square(&s, &geometric_law(0.3, 30), 1e-3).unwrap();
        assert!(r.paired && r.cells >= MIN_CELLS && r.pass, "{r:?}");
        // a sorted stream has the right marginal but dependent neighbours
        let mut sorted = s.clone();
        sorted.sort();
        assert!(
            !chi_square(&sorted, &geometric_law(0.3, 30), 1e-3)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn critical_values() {
        let r = finish(&[50, 50], &[0.5, 0.5], 100.0, 1e-3, false).unwrap();
        assert!((r.critical - 10.827566).abs() < 1e-5);
        assert_eq!(r.statistic, 0.0);
        assert!(chi_square(&[0], &geometric_law(0.5, 4), 0.0).is_err());
        assert_eq!(quantile(&[1, 2, 3, 4], 0.5), 2);
        assert_eq!(quantile(&[1, 2, 3, 4], 1.0), 4);
    }
}
