//! Dataset directories of `aAA_sSS_eEE.dseq` files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::PipelineError;

/// Action, subject and episode parsed from an `aAA_sSS_eEE` name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceName {
    pub action: i32,
    pub subject: i32,
    pub episode: i32,
}

impl SequenceName {
    pub fn file_stem(&self) -> String {
        format!("a{:02}_s{:02}_e{:02}", self.action, self.subject, self.episode)
    }
}

/// Parses `aAA_sSS_eEE` (an optional suffix after another `_` is ignored).
pub fn parse_sequence_name(name: &str) -> Option<SequenceName> {
    let mut parts = name.split('_');
    let mut field = |prefix: char| -> Option<i32> {
        let p = parts.next()?;
        let digits = p.strip_prefix(prefix)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    };
    Some(SequenceName {
        action: field('a')?,
        subject: field('s')?,
        episode: field('e')?,
    })
}

/// One sequence file of a dataset directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: SequenceName,
    pub path: PathBuf,
}

/// Lists the `.dseq` files of `dir` in name order. Files whose names do not
/// parse are rejected.
pub fn list_dataset(dir: &Path) -> Result<Vec<DatasetEntry>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(io)? {
        let path = e.map_err(io)?.path();
        if path.extension().and_then(|x| x.to_str()) != Some("dseq") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let name = parse_sequence_name(stem)
            .ok_or_else(|| PipelineError::Dataset(format!("cannot parse sequence name {}", path.display())))?;
        out.push(DatasetEntry { name, path });
    }
    if out.is_empty() {
        return Err(PipelineError::Dataset(format!("no .dseq files in {}", dir.display())));
    }
    out.sort_by_key(|e| e.name);
    Ok(out)
}

/// Subjects used for training and for testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_subjects: BTreeSet<i32>,
    pub test_subjects: BTreeSet<i32>,
}

impl SplitSpec {
    pub fn new(train: impl IntoIterator<Item = i32>, test: impl IntoIterator<Item = i32>) -> Result<Self, PipelineError> {
        let s = Self {
            train_subjects: train.into_iter().collect(),
            test_subjects: test.into_iter().collect(),
        };
        if s.train_subjects.is_empty() || s.test_subjects.is_empty() {
            return Err(PipelineError::Dataset("both splits need at least one subject".into()));
        }
        if let Some(x) = s.train_subjects.intersection(&s.test_subjects).next() {
            return Err(PipelineError::Dataset(format!("subject {x} is in both splits")));
        }
        Ok(s)
    }

    /// Train and test entries, each in dataset order. Every listed subject
    /// must occur in the dataset.
    pub fn apply(&self, entries: &[DatasetEntry]) -> Result<(Vec<DatasetEntry>, Vec<DatasetEntry>), PipelineError> {
        let present: BTreeSet<i32> = entries.iter().map(|e| e.name.subject).collect();
        if let Some(s) = self.train_subjects.iter().chain(&self.test_subjects).find(|s| !present.contains(s)) {
            return Err(PipelineError::Dataset(format!("subject {s} has no sequences")));
        }
        let pick = |set: &BTreeSet<i32>| entries.iter().filter(|e| set.contains(&e.name.subject)).cloned().collect();
        Ok((pick(&self.train_subjects), pick(&self.test_subjects)))
    }
}

/// Parses a subject list such as `1,3,5` or `1-3,7`.
pub fn parse_subject_list(s: &str) -> Result<Vec<i32>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("bad subject {t:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("empty subject list".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subject_lists() {
        assert_eq!(parse_subject_list("1,3, 5").unwrap(), vec![1, 3, 5]);
        assert_eq!(parse_subject_list("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert!(parse_subject_list("").is_err());
        assert!(parse_subject_list("x").is_err());
        assert!(parse_subject_list("4-2").is_err());
    }

    #[test]
    fn splits_must_be_disjoint_and_present() {
        assert!(SplitSpec::new([1, 2], [2, 3]).is_err());
        assert!(SplitSpec::new([], [3]).is_err());
        let entry = |a, s| DatasetEntry {
            name: SequenceName { action: a, subject: s, episode: 1 },
            path: PathBuf::new(),
        };
        let entries = vec![entry(1, 1), entry(1, 2), entry(2, 1), entry(2, 3)];
        let split = SplitSpec::new([1], [2, 3]).unwrap();
        let (tr, te) = split.apply(&entries).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(te.len(), 2);
        assert!(SplitSpec::new([1], [9]).unwrap().apply(&entries).is_err());
    }

    #[test]
    fn parses_msr_style_names() {
        let n = parse_sequence_name("a03_s10_e02").unwrap();
        assert_eq!((n.action, n.subject, n.episode), (3, 10, 2));
        assert_eq!(n.file_stem(), "a03_s10_e02");
        assert_eq!(parse_sequence_name("a3_s1_e2_sdepth").unwrap().subject, 1);
        assert!(parse_sequence_name("foo").is_none());
        assert!(parse_sequence_name("a_s1_e1").is_none());
    }
}
