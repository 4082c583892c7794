use super::stats::{mean, std_dev};
use super::EvalError;
use crate::matching::{collision_rate, post_transform_score};
use crate::seed::derive;
use crate::template::{gaussian_bank, iom_hash, iom_hash_streaming, FusedFeature, IomParams};

/// `count` seed pairs drawn from `master`; the two seeds of a pair always differ.
pub fn seed_pairs(master: u64, count: usize) -> Vec<(u64, u64)> {
    (0..count as u64)
        .map(|n| {
            let a = derive(master, &[n, 0]);
            let mut b = derive(master, &[n, 1]);
            let mut bump = 2;
            while b == a {
                b = derive(master, &[n, bump]);
                bump += 1;
            }
            (a, b)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevocabilityStats {
    pub pairs: usize,
    pub cross_mean: f64,
    pub cross_std: f64,
    pub mated_mean: f64,
    /// `1 / k`.
    pub expected: f64,
    /// Three binomial standard deviations of the mean over `pairs * l` positions.
    pub bound: f64,
    pub pass: bool,
}

/// Hashes the same feature under each seed of every pair and reports the
/// collision rate between the two templates. `mated_checks` pairs also rehash
/// under the first seed, which must reproduce the template exactly.
pub fn revocability_test(
    c: &FusedFeature,
    params: &IomParams,
    pairs: &[(u64, u64)],
    mated_checks: usize,
) -> Result<RevocabilityStats, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::InsufficientData("revocability needs a seed pair".into()));
    }
    let with_seed = |seed| IomParams { seed, ..*params };
    let mut cross = Vec::with_capacity(pairs.len());
    let mut mated = Vec::new();
    for (n, &(a, b)) in pairs.iter().enumerate() {
        let ta = iom_hash_streaming(c, &with_seed(a))?;
        let tb = iom_hash_streaming(c, &with_seed(b))?;
        cross.push(collision_rate(&ta, &tb)?.value());
        if n < mated_checks {
            let again = iom_hash_streaming(c, &with_seed(a))?;
            mated.push(post_transform_score(&ta, &again)?.value());
        }
    }
    let expected = 1.0 / params.k as f64;
    let positions = (pairs.len() * params.l) as f64;
    let bound = 3.0 * (expected * (1.0 - expected) / positions).sqrt();
    let cross_mean = mean(&cross);
    let mated_mean = if mated.is_empty() { 1.0 } else { mean(&mated) };
    let same_seed_pairs = pairs.iter().all(|(a, b)| a == b);
    let pass = mated_mean == 1.0
        && if same_seed_pairs {
            cross_mean == 1.0
        } else {
            (cross_mean - expected).abs() <= bound
        };
    Ok(RevocabilityStats {
        pairs: pairs.len(),
        cross_mean,
        cross_std: std_dev(&cross),
        mated_mean,
        expected,
        bound,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlinkabilityStats {
    /// Same identity, different samples, different seeds.
    pub mated_mean: f64,
    /// Different identities, different seeds.
    pub nonmated_mean: f64,
    pub delta: f64,
    pub mated_count: usize,
    pub nonmated_count: usize,
    pub pass: bool,
}

/// Largest tolerated gap between the mated and non-mated cross-seed means.
pub const UNLINKABILITY_TOLERANCE: f64 = 0.02;

/// For each seed pair `(a, b)`, sample 0 of every identity is hashed under
/// `a` and sample 1 under `b`. Mated scores compare the two templates of one
/// identity, non-mated scores those of different identities.
pub fn unlinkability_test(
    features: &[Vec<FusedFeature>],
    params: &IomParams,
    pairs: &[(u64, u64)],
) -> Result<UnlinkabilityStats, EvalError> {
    let usable: Vec<&Vec<FusedFeature>> = features.iter().filter(|f| f.len() >= 2).collect();
    if usable.len() < 2 || pairs.is_empty() {
        return Err(EvalError::InsufficientData(format!(
            "unlinkability needs 2 identities with 2 samples and a seed pair; have {} identities, {} pairs",
            usable.len(),
            pairs.len()
        )));
    }
    let dimension = usable[0][0].dimension();
    let mut mated = Vec::new();
    let mut nonmated = Vec::new();
    for &(a, b) in pairs {
        if a == b {
            return Err(EvalError::InsufficientData("seed pair must hold distinct seeds".into()));
        }
        let hash_all = |seed, sample: usize| -> Result<Vec<_>, EvalError> {
            let bank = gaussian_bank(&IomParams { seed, ..*params }, dimension)?;
            usable
                .iter()
                .map(|f| iom_hash(&f[sample], &bank).map_err(EvalError::from))
                .collect()
        };
        let first = hash_all(a, 0)?;
        let second = hash_all(b, 1)?;
        for (i, ti) in first.iter().enumerate() {
            for (j, tj) in second.iter().enumerate() {
                let s = collision_rate(ti, tj)?.value();
                if i == j {
                    mated.push(s);
                } else {
                    nonmated.push(s);
                }
            }
        }
    }
    let (mated_mean, nonmated_mean) = (mean(&mated), mean(&nonmated));
    let delta = (mated_mean - nonmated_mean).abs();
    Ok(UnlinkabilityStats {
        mated_mean,
        nonmated_mean,
        delta,
        mated_count: mated.len(),
        nonmated_count: nonmated.len(),
        pass: delta <= UNLINKABILITY_TOLERANCE,
    })
}
