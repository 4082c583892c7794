use super::EvalError;
use crate::matching::{MatchError, Score};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Impostor pairing rule. Genuine pairs are always every unordered
/// within-identity pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Protocol {
    /// First sample of each identity against the first sample of every other.
    #[default]
    FirstSample,
    /// Every cross-identity sample pair; above `cap` pairs a subset of `cap`
    /// is drawn with `seed` and kept in enumeration order.
    FullCross { cap: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    /// Checks every score is a finite value in `[0, 1]`.
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Result<Self, EvalError> {
        if let Some(&bad) = genuine
            .iter()
            .chain(&impostor)
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(EvalError::InvalidScore(bad));
        }
        Ok(Self { genuine, impostor })
    }
}

type Pair = ((usize, usize), (usize, usize));

fn impostor_pairs(sizes: &[usize], protocol: &Protocol) -> Vec<Pair> {
    match *protocol {
        Protocol::FirstSample => {
            let ids: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] > 0).collect();
            let mut pairs = Vec::new();
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    pairs.push(((i, 0), (j, 0)));
                }
            }
            pairs
        }
        Protocol::FullCross { cap, seed } => {
            let mut pairs = Vec::new();
            for i in 0..sizes.len() {
                for j in i + 1..sizes.len() {
                    for a in 0..sizes[i] {
                        for b in 0..sizes[j] {
                            pairs.push(((i, a), (j, b)));
                        }
                    }
                }
            }
            if pairs.len() > cap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut keep = rand::seq::index::sample(&mut rng, pairs.len(), cap).into_vec();
                keep.sort_unstable();
                pairs = keep.into_iter().map(|k| pairs[k]).collect();
            }
            pairs
        }
    }
}

/// Scores every genuine and impostor pair of `groups` (one inner list per
/// identity). Output order follows enumeration order, so it never depends on
/// scheduling.
pub fn gen_scores<T>(
    groups: &[Vec<T>],
    protocol: &Protocol,
    score: impl Fn(&T, &T) -> Result<Score, MatchError>,
) -> Result<ScoreSet, EvalError> {
    let populated = groups.iter().filter(|g| !g.is_empty()).count();
    if populated < 2 {
        return Err(EvalError::InsufficientData(format!(
            "impostor pairs need at least 2 identities, found {populated}"
        )));
    }
    let mut genuine = Vec::new();
    for g in groups {
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                genuine.push(score(&g[a], &g[b])?.value());
            }
        }
    }
    if genuine.is_empty() {
        return Err(EvalError::InsufficientData(
            "genuine pairs need an identity with at least 2 samples".into(),
        ));
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let impostor = impostor_pairs(&sizes, protocol)
        .into_iter()
        .map(|((i, a), (j, b))| score(&groups[i][a], &groups[j][b]).map(Score::value))
        .collect::<Result<Vec<_>, _>>()?;
    if impostor.is_empty() {
        return Err(EvalError::InsufficientData("no impostor pairs".into()));
    }
    ScoreSet::new(genuine, impostor)
}
