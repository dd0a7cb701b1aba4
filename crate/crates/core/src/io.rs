//! On-disk formats: JSON documents and JSON-lines datasets.
//!
//! A dataset directory holds `train.jsonl`, `validation.jsonl`,
//! `test.jsonl` (one `{"x": [[...]], "y": [...]}` per line), `space.json`,
//! `model.json` and `meta.json`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{SyntheticConfig, SyntheticData};
use crate::model::{Instance, ScoringModel, WeightVector};
use crate::space::OutputSpace;

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALIDATION_FILE: &str = "validation.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const SPACE_FILE: &str = "space.json";
pub const MODEL_FILE: &str = "model.json";
pub const META_FILE: &str = "meta.json";

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_jsonl(path: &Path, instances: &[Instance]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for inst in instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads one instance per non-blank line.
pub fn read_jsonl(path: &Path) -> Result<Vec<Instance>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub attempts: usize,
    pub config: SyntheticConfig,
    pub w_star: WeightVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub model: ScoringModel,
    pub space: OutputSpace,
    pub train: Vec<Instance>,
    pub validation: Vec<Instance>,
    pub test: Vec<Instance>,
    pub meta: Option<DatasetMeta>,
}

impl Dataset {
    /// Checks that every split fits the model and lies in the space.
    pub fn validate(&self) -> Result<()> {
        if self.space.n() != self.model.n() || self.space.alphabet() != self.model.alphabet() {
            return Err(Error::DimensionMismatch {
                axis: "output space variables",
                expected: self.model.n(),
                got: self.space.n(),
            });
        }
        for inst in self.train.iter().chain(&self.validation).chain(&self.test) {
            self.model.check_input(&inst.x)?;
            inst.y.check(self.model.n(), self.model.alphabet())?;
        }
        Ok(())
    }
}

/// Writes a generated problem into `dir`, creating it if needed, and
/// returns the paths written.
pub fn write_dataset(dir: &Path, data: &SyntheticData, config: &SyntheticConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, split) in [
        (TRAIN_FILE, &data.train),
        (VALIDATION_FILE, &data.validation),
        (TEST_FILE, &data.test),
    ] {
        let path = dir.join(name);
        write_jsonl(&path, split)?;
        written.push(path);
    }
    let path = dir.join(SPACE_FILE);
    write_json(&path, &data.space)?;
    written.push(path);
    let path = dir.join(MODEL_FILE);
    write_json(&path, &data.model)?;
    written.push(path);
    let meta = DatasetMeta {
        seed: data.seed,
        attempts: data.attempts,
        config: config.clone(),
        w_star: data.w_star.clone(),
    };
    let path = dir.join(META_FILE);
    write_json(&path, &meta)?;
    written.push(path);
    Ok(written)
}

/// Reads a dataset directory. `validation.jsonl`, `test.jsonl` and
/// `meta.json` are optional.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let optional_split = |name: &str| -> Result<Vec<Instance>> {
        let path = dir.join(name);
        if path.exists() {
            read_jsonl(&path)
        } else {
            Ok(Vec::new())
        }
    };
    let meta_path = dir.join(META_FILE);
    let dataset = Dataset {
        model: read_json(&dir.join(MODEL_FILE))?,
        space: read_json(&dir.join(SPACE_FILE))?,
        train: read_jsonl(&dir.join(TRAIN_FILE))?,
        validation: optional_split(VALIDATION_FILE)?,
        test: optional_split(TEST_FILE)?,
        meta: if meta_path.exists() { Some(read_json(&meta_path)?) } else { None },
    };
    dataset.validate()?;
    Ok(dataset)
}
