//! Bundled example experiments and the text corpus they read.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{load_experiment, ExperimentSpec, SpecError};
use crate::sim::RandomSource;

pub const EXPERIMENT_FILE: &str = "experiment.graphml";
pub const CORPUS_DIR: &str = "corpus";
pub const CORPUS_FILES: usize = 100;

struct Bundle {
    name: &'static str,
    about: &'static str,
    files: &'static [(&'static str, &'static str)],
    corpus: bool,
}

macro_rules! file {
    ($dir:literal, $name:literal) => {
        ($name, include_str!(concat!("../scenarios/", $dir, "/", $name)))
    };
}

const BUNDLES: &[Bundle] = &[
    Bundle {
        name: "wordcount",
        about: "file source, word count and per-topic average document length jobs, one broker",
        files: &[
            file!("wordcount", "experiment.graphml"),
            file!("wordcount", "producer.yaml"),
            file!("wordcount", "broker.yaml"),
            file!("wordcount", "wordcount.yaml"),
            file!("wordcount", "avgwords.yaml"),
            file!("wordcount", "consumer.yaml"),
            file!("wordcount", "topics.yaml"),
        ],
        corpus: true,
    },
    Bundle {
        name: "partition",
        about: "ten co-located broker/producer/consumer hosts on a star, 120 s leader disconnect",
        files: &[
            file!("partition", "experiment.graphml"),
            file!("partition", "producer.yaml"),
            file!("partition", "consumer.yaml"),
            file!("partition", "broker.yaml"),
            file!("partition", "topics.yaml"),
            file!("partition", "faults.yaml"),
        ],
        corpus: false,
    },
    Bundle {
        name: "delaysweep",
        about: "split and count as separate jobs for link delay sweeps",
        files: &[
            file!("delaysweep", "experiment.graphml"),
            file!("delaysweep", "producer.yaml"),
            file!("delaysweep", "broker.yaml"),
            file!("delaysweep", "split.yaml"),
            file!("delaysweep", "count.yaml"),
            file!("delaysweep", "consumer.yaml"),
            file!("delaysweep", "topics.yaml"),
        ],
        corpus: true,
    },
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (available: wordcount, partition, delaysweep)")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// `(name, description)` of every bundled scenario.
pub fn list() -> Vec<(&'static str, &'static str)> {
    BUNDLES.iter().map(|b| (b.name, b.about)).collect()
}

pub fn exists(name: &str) -> bool {
    BUNDLES.iter().any(|b| b.name == name)
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write a scenario's files into `dir`; returns the experiment path.
pub fn export(name: &str, dir: &Path) -> Result<PathBuf, ScenarioError> {
    let bundle = BUNDLES
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| ScenarioError::Unknown(name.to_string()))?;
    let mkdir = |p: &Path| {
        fs::create_dir_all(p).map_err(|source| ScenarioError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    mkdir(dir)?;
    for (file, text) in bundle.files {
        write(&dir.join(file), text)?;
    }
    if bundle.corpus {
        let corpus = dir.join(CORPUS_DIR);
        mkdir(&corpus)?;
        for (file, text) in corpus_files() {
            write(&corpus.join(file), &text)?;
        }
    }
    Ok(dir.join(EXPERIMENT_FILE))
}

/// Export into `dir` and parse.
pub fn load(name: &str, dir: &Path) -> Result<ExperimentSpec, ScenarioError> {
    let path = export(name, dir)?;
    Ok(load_experiment(&path)?)
}

const TOPICS: &[&str] = &["sports", "politics", "science", "arts"];

const WORDS: &[&str] = &[
    "the", "a", "of", "and", "to", "in", "is", "for", "on", "with", "team", "match", "goal", "season", "coach",
    "player", "league", "score", "win", "loss", "vote", "policy", "senate", "budget", "election", "debate", "law",
    "minister", "party", "reform", "atom", "cell", "energy", "theory", "data", "model", "orbit", "planet", "gene",
    "signal", "paint", "music", "stage", "film", "novel", "poem", "gallery", "dance", "song", "actor", "city",
    "river", "market", "report", "year", "day", "night", "world", "people", "history", "future", "network",
    "stream", "record", "broker", "topic", "window", "count", "average", "latency", "link", "delay", "switch",
    "host", "node", "packet", "queue", "buffer", "leader", "replica",
];

/// The bundled corpus: `(file name, text)`, generated from a fixed seed.
/// Names are `<topic>-<nnn>.txt`, so the file key is the topic.
pub fn corpus_files() -> Vec<(String, String)> {
    let mut rng = RandomSource::new(2022, "corpus");
    (0..CORPUS_FILES)
        .map(|i| {
            let topic = TOPICS[i % TOPICS.len()];
            let lines = 2 + (rng.next_u64() % 4) as usize;
            let mut text = String::new();
            for _ in 0..lines {
                let words = 6 + (rng.next_u64() % 15) as usize;
                let line: Vec<&str> = (0..words)
                    .map(|_| WORDS[(rng.next_u64() % WORDS.len() as u64) as usize])
                    .collect();
                text.push_str(&line.join(" "));
                text.push('\n');
            }
            (format!("{topic}-{i:03}.txt"), text)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_stable_and_sized() {
        let a = corpus_files();
        assert_eq!(a.len(), CORPUS_FILES);
        assert_eq!(a, corpus_files());
        assert!(a.iter().all(|(_, t)| !t.trim().is_empty()));
    }

    #[test]
    fn every_bundle_exports_and_parses() {
        for (name, _) in list() {
            let dir = tempfile::tempdir().unwrap();
            let spec = load(name, dir.path()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!spec.nodes.is_empty());
        }
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(export("nope", dir.path()), Err(ScenarioError::Unknown(_))));
    }
}
