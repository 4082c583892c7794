use super::security::{seed_pairs, RevocabilityStats, UnlinkabilityStats};
use super::stats::{accuracy_loss, compute_eer, mean, roc, rounding_note, RocPoint};
use super::{
    gen_scores, revocability_test, timing_report, unlinkability_test, Dataset, EvalError,
    Protocol, ScoreSet, TimingStats,
};
use crate::matching::{post_transform_score, pre_transform_score};
use crate::pipeline::Pipeline;
use crate::seed::derive;
use crate::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub protocol: Protocol,
    /// Seed pairs for the revocability statistic.
    pub revocation_pairs: usize,
    /// Seed pairs for the unlinkability statistic.
    pub unlinkability_pairs: usize,
    /// Images timed, taken in dataset order.
    pub timing_samples: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            protocol: Protocol::FirstSample,
            revocation_pairs: 10,
            unlinkability_pairs: 1,
            timing_samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config_echo: Vec<String>,
    pub seed: u64,
    pub protocol: Protocol,
    pub identities: usize,
    pub samples: usize,
    pub skipped: usize,
    pub pre: ScoreSet,
    pub post: ScoreSet,
    /// Percent.
    pub eer_pre: f64,
    /// Percent.
    pub eer_post: f64,
    /// Percentage points, exactly `eer_post - eer_pre`.
    pub accuracy_loss: f64,
    pub roc_pre: Vec<RocPoint>,
    pub roc_post: Vec<RocPoint>,
    pub revocability: RevocabilityStats,
    pub unlinkability: Option<UnlinkabilityStats>,
    pub timing: TimingStats,
    pub notes: Vec<String>,
}

/// Runs the plain and hashed protocols on `ds` with projection seed `seed`.
pub fn evaluate(ds: &Dataset, pipeline: &Pipeline, seed: u64, opts: &EvalOptions) -> Result<EvalReport, Error> {
    let images = ds.images();
    let plain = images
        .iter()
        .map(|group| group.iter().map(|img| pipeline.extract(img)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    let fused = plain
        .iter()
        .map(|group| group.iter().map(|f| pipeline.fuse(f)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;

    let match_cfg = pipeline.match_config();
    let pre = gen_scores(&plain, &opts.protocol, |a, b| pre_transform_score(a, b, &match_cfg))?;

    let params = pipeline.iom_params(seed);
    let bank = pipeline.projection_bank(seed)?;
    let templates = fused
        .iter()
        .map(|group| group.iter().map(|c| crate::template::iom_hash(c, &bank)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    let post = gen_scores(&templates, &opts.protocol, post_transform_score)?;

    let flat: Vec<_> = images.iter().flatten().copied().collect();
    let timed = &flat[..opts.timing_samples.clamp(1, flat.len())];
    let timing = timing_report(timed, pipeline, &bank)?;
    drop(bank);

    let first = fused
        .iter()
        .find_map(|g| g.first())
        .ok_or_else(|| EvalError::InsufficientData("no samples".into()))?;
    let revocability = revocability_test(
        first,
        &params,
        &seed_pairs(derive(seed, &[1]), opts.revocation_pairs.max(1)),
        1,
    )?;
    let unlinkability = match unlinkability_test(
        &fused,
        &params,
        &seed_pairs(derive(seed, &[2]), opts.unlinkability_pairs.max(1)),
    ) {
        Ok(stats) => Some(stats),
        Err(EvalError::InsufficientData(why)) => {
            log::warn!("unlinkability statistic skipped: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let roc_pre = roc(&pre)?;
    let roc_post = roc(&post)?;
    let eer_pre = 100.0 * compute_eer(&pre)?;
    let eer_post = 100.0 * compute_eer(&post)?;
    let loss = accuracy_loss(eer_pre, eer_post);
    let notes = rounding_note(eer_pre, eer_post, loss, 2).into_iter().collect();

    Ok(EvalReport {
        config_echo: pipeline.config().echo_lines(),
        seed,
        protocol: opts.protocol,
        identities: ds.identities.len(),
        samples: ds.sample_count(),
        skipped: ds.skipped.len(),
        pre,
        post,
        eer_pre,
        eer_post,
        accuracy_loss: loss,
        roc_pre,
        roc_post,
        revocability,
        unlinkability,
        timing,
        notes,
    })
}

fn protocol_name(p: &Protocol) -> String {
    match p {
        Protocol::FirstSample => "first_sample".into(),
        Protocol::FullCross { cap, seed } => format!("full_cross(cap={cap},seed={seed:#x})"),
    }
}

impl EvalReport {
    /// Header lines shared by every artifact: effective config, seed, protocol.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = self.config_echo.clone();
        lines.push(format!("seed={:#x}", self.seed));
        lines.push(format!("protocol={}", protocol_name(&self.protocol)));
        lines
    }

    /// `(metric, value)` rows. Rows whose name starts with `timing_` are the
    /// only ones that vary between runs on identical inputs.
    pub fn metrics(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:.6}");
        let b = |v: bool| if v { "pass" } else { "fail" }.to_string();
        let r = &self.revocability;
        let mut rows = vec![
            ("identities", self.identities.to_string()),
            ("samples", self.samples.to_string()),
            ("skipped", self.skipped.to_string()),
            ("genuine_pairs", self.pre.genuine.len().to_string()),
            ("impostor_pairs", self.pre.impostor.len().to_string()),
            ("eer_pre_pct", f(self.eer_pre)),
            ("eer_post_pct", f(self.eer_post)),
            ("accuracy_loss_pct", f(self.accuracy_loss)),
            ("genuine_mean_pre", f(mean(&self.pre.genuine))),
            ("impostor_mean_pre", f(mean(&self.pre.impostor))),
            ("genuine_mean_post", f(mean(&self.post.genuine))),
            ("impostor_mean_post", f(mean(&self.post.impostor))),
            ("revocability_pairs", r.pairs.to_string()),
            ("revocability_cross_mean", f(r.cross_mean)),
            ("revocability_cross_std", f(r.cross_std)),
            ("revocability_expected", f(r.expected)),
            ("revocability_bound", f(r.bound)),
            ("revocability_mated_mean", f(r.mated_mean)),
            ("revocability", b(r.pass)),
        ];
        if let Some(u) = &self.unlinkability {
            rows.extend([
                ("unlinkability_mated_mean", f(u.mated_mean)),
                ("unlinkability_nonmated_mean", f(u.nonmated_mean)),
                ("unlinkability_delta", f(u.delta)),
                ("unlinkability", b(u.pass)),
            ]);
        }
        rows.extend([
            ("timing_samples", self.timing.samples.to_string()),
            ("timing_mean_ms", format!("{:.3}", self.timing.mean_ms)),
            ("timing_p95_ms", format!("{:.3}", self.timing.p95_ms)),
        ]);
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.echo() {
            let _ = writeln!(out, "# {line}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        out.push_str("metric,value\n");
        for (k, v) in self.metrics() {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Evaluation summary");
        let _ = writeln!(
            out,
            "  dataset         {} identities, {} samples, {} skipped",
            self.identities, self.samples, self.skipped
        );
        let _ = writeln!(
            out,
            "  pairs           {} genuine, {} impostor ({})",
            self.pre.genuine.len(),
            self.pre.impostor.len(),
            protocol_name(&self.protocol)
        );
        let _ = writeln!(out, "  EER plain       {:.4} %", self.eer_pre);
        let _ = writeln!(out, "  EER hashed      {:.4} %", self.eer_post);
        let _ = writeln!(out, "  accuracy loss   {:.4} points", self.accuracy_loss);
        let _ = writeln!(
            out,
            "  hashed means    genuine {:.4}, impostor {:.4}",
            mean(&self.post.genuine),
            mean(&self.post.impostor)
        );
        let r = &self.revocability;
        let _ = writeln!(
            out,
            "  revocability    cross-seed {:.4} (expected {:.4} +/- {:.4}), same-seed {:.4}: {}",
            r.cross_mean,
            r.expected,
            r.bound,
            r.mated_mean,
            if r.pass { "pass" } else { "fail" }
        );
        match &self.unlinkability {
            Some(u) => {
                let _ = writeln!(
                    out,
                    "  unlinkability   mated {:.4}, non-mated {:.4}, delta {:.4}: {}",
                    u.mated_mean,
                    u.nonmated_mean,
                    u.delta,
                    if u.pass { "pass" } else { "fail" }
                );
            }
            None => {
                let _ = writeln!(out, "  unlinkability   skipped (needs 2 identities with 2 samples)");
            }
        }
        let _ = writeln!(
            out,
            "  timing          mean {:.3} ms, p95 {:.3} ms over {} images",
            self.timing.mean_ms, self.timing.p95_ms, self.timing.samples
        );
        for note in &self.notes {
            let _ = writeln!(out, "  note: {note}");
        }
        let _ = writeln!(out, "Configuration");
        for line in self.echo() {
            let _ = writeln!(out, "  {line}");
        }
        out
    }

    pub fn roc_csv(&self, points: &[RocPoint]) -> String {
        let mut out = String::new();
        for line in self.echo() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("threshold,far,frr\n");
        for p in points {
            let _ = writeln!(out, "{},{:.6},{:.6}", p.threshold, p.far, p.frr);
        }
        out
    }

    /// Writes `report.csv`, `summary.txt`, `roc_pre.csv` and `roc_post.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, Error> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let files = [
            ("report.csv", self.to_csv()),
            ("summary.txt", self.summary()),
            ("roc_pre.csv", self.roc_csv(&self.roc_pre)),
            ("roc_post.csv", self.roc_csv(&self.roc_post)),
        ];
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::imaging::{synth_palm, SynthSpec};

    fn small_run(seed: u64) -> EvalReport {
        let spec = SynthSpec::default();
        let ds = Dataset::from_images(
            (0..3)
                .map(|i| (format!("{i:04}"), (0..3).map(|s| synth_palm(&spec, i, s)).collect()))
                .collect(),
        );
        let cfg = Config {
            iom_l: 40,
            iom_k: 8,
            ..Config::default()
        };
        let opts = EvalOptions {
            revocation_pairs: 3,
            timing_samples: 2,
            ..EvalOptions::default()
        };
        evaluate(&ds, &Pipeline::new(cfg).unwrap(), seed, &opts).unwrap()
    }

    fn without_timing(csv: &str) -> Vec<&str> {
        csv.lines().filter(|l| !l.starts_with("timing_")).collect()
    }

    #[test]
    fn report_contract() {
        let r = small_run(11);
        assert_eq!(r.accuracy_loss, r.eer_post - r.eer_pre);
        assert_eq!((r.pre.genuine.len(), r.pre.impostor.len()), (9, 3));
        let csv = r.to_csv();
        for key in ["eer_pre_pct,", "eer_post_pct,", "accuracy_loss_pct,", "timing_mean_ms,"] {
            assert!(csv.contains(key), "{key} missing from\n{csv}");
        }
        assert!(csv.contains("# iom_k=8"));
        assert!(r.summary().contains("iom_l=40"));
        let roc = r.roc_csv(&r.roc_post);
        assert!(roc.contains("threshold,far,frr\n") && roc.contains("\ninf,0.000000,1.000000\n"));
    }

    #[test]
    fn rerun_is_identical_apart_from_timing() {
        let (a, b) = (small_run(11), small_run(11));
        assert_eq!(without_timing(&a.to_csv()), without_timing(&b.to_csv()));
        assert_eq!(a.roc_csv(&a.roc_pre), b.roc_csv(&b.roc_pre));
        assert_eq!(a.post, b.post);
    }

    #[test]
    fn single_identity_is_rejected() {
        let ds = Dataset::from_images(vec![(
            "only".into(),
            (0..3).map(|s| synth_palm(&SynthSpec::default(), 0, s)).collect(),
        )]);
        let cfg = Config {
            iom_l: 8,
            iom_k: 4,
            ..Config::default()
        };
        let err = evaluate(&ds, &Pipeline::new(cfg).unwrap(), 1, &EvalOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Eval(EvalError::InsufficientData(_))), "{err}");
    }

    #[test]
    fn writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let files = small_run(3).write_to(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.contains("mfrat_window=13"));
        }
    }
}
