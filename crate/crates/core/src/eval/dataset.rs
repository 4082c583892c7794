use super::EvalError;
use crate::imaging::{load_pgm, GrayImage};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub path: PathBuf,
    pub image: GrayImage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub name: String,
    pub samples: Vec<Sample>,
}

/// A file or identity left out of the dataset, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

/// Identities in lexicographic order, each with samples in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub identities: Vec<Identity>,
    pub skipped: Vec<Skipped>,
}

impl Dataset {
    /// In-memory dataset; sample paths are synthesized as `<name>/<index>.pgm`.
    pub fn from_images(groups: Vec<(String, Vec<GrayImage>)>) -> Self {
        let identities = groups
            .into_iter()
            .map(|(name, images)| Identity {
                samples: images
                    .into_iter()
                    .enumerate()
                    .map(|(i, image)| Sample {
                        path: Path::new(&name).join(format!("{i:04}.pgm")),
                        image,
                    })
                    .collect(),
                name,
            })
            .collect();
        Self {
            identities,
            skipped: Vec::new(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.identities.iter().map(|i| i.samples.len()).sum()
    }

    /// Images grouped by identity.
    pub fn images(&self) -> Vec<Vec<&GrayImage>> {
        self.identities
            .iter()
            .map(|i| i.samples.iter().map(|s| &s.image).collect())
            .collect()
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<(String, PathBuf)>, EvalError> {
    let io = |e: std::io::Error| EvalError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    };
    let mut entries = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        entries.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
    }
    entries.sort();
    Ok(entries)
}

/// Loads `<root>/<identity>/<sample>.pgm`. Other files and nested directories
/// are ignored; unreadable images and identities without any readable image
/// are skipped with a warning and listed in [`Dataset::skipped`].
pub fn scan_dataset(root: &Path) -> Result<Dataset, EvalError> {
    let mut ds = Dataset::default();
    for (name, dir) in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let mut samples = Vec::new();
        for (file, path) in sorted_entries(&dir)? {
            if !file.ends_with(".pgm") || !path.is_file() {
                continue;
            }
            let loaded = std::fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|bytes| load_pgm(&bytes).map_err(|e| e.to_string()));
            match loaded {
                Ok(image) => samples.push(Sample { path, image }),
                Err(reason) => {
                    log::warn!("skipping {}: {reason}", path.display());
                    ds.skipped.push(Skipped { path, reason });
                }
            }
        }
        if samples.is_empty() {
            log::warn!("skipping identity {name}: no readable images");
            ds.skipped.push(Skipped {
                path: dir,
                reason: "no readable images".into(),
            });
        } else {
            ds.identities.push(Identity { name, samples });
        }
    }
    if ds.identities.is_empty() {
        return Err(EvalError::EmptyRoot(root.to_path_buf()));
    }
    Ok(ds)
}
