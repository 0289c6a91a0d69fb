use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::KeyValueDoc;
use crate::error::{Error, Result};
use crate::signal::{ClassLabel, SubjectId};

/// Recording division of the five-set corpus layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Division {
    A,
    B,
    C,
    D,
    E,
}

impl Division {
    pub const ALL: [Division; 5] = [Division::A, Division::B, Division::C, Division::D, Division::E];

    /// A and B are healthy recordings, C, D and E come from injured subjects.
    pub fn label(self) -> ClassLabel {
        match self {
            Division::A | Division::B => ClassLabel::Negative,
            Division::C | Division::D | Division::E => ClassLabel::Positive,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Division::A => 'A',
            Division::B => 'B',
            Division::C => 'C',
            Division::D => 'D',
            Division::E => 'E',
        }
    }

    pub fn from_letter(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'A' => Ok(Division::A),
            'B' => Ok(Division::B),
            'C' => Ok(Division::C),
            'D' => Ok(Division::D),
            'E' => Ok(Division::E),
            _ => Err(Error::param(format!("unknown division '{c}' (A-E)"))),
        }
    }
}

impl fmt::Display for Division {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Binary task: which divisions form the negative and positive class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub negative: Vec<Division>,
    pub positive: Vec<Division>,
}

impl Task {
    /// Parses `<letters>_vs_<letters>`, e.g. `A_vs_E`, `CD_vs_E`, `AB_vs_CDE`.
    pub fn parse(s: &str) -> Result<Self> {
        let (neg, pos) = s
            .split_once("_vs_")
            .ok_or_else(|| Error::param(format!("task '{s}' is not of the form <divisions>_vs_<divisions>")))?;
        let letters = |part: &str| -> Result<Vec<Division>> {
            let mut v: Vec<Division> = part.chars().map(Division::from_letter).collect::<Result<_>>()?;
            v.sort();
            v.dedup();
            if v.is_empty() {
                return Err(Error::param(format!("task '{s}' has an empty side")));
            }
            Ok(v)
        };
        let task = Task {
            negative: letters(neg)?,
            positive: letters(pos)?,
        };
        if task.negative.iter().any(|d| task.positive.contains(d)) {
            return Err(Error::param(format!("task '{s}' uses a division on both sides")));
        }
        Ok(task)
    }

    pub fn name(&self) -> String {
        let side = |v: &[Division]| v.iter().map(|d| d.letter()).collect::<String>();
        format!("{}_vs_{}", side(&self.negative), side(&self.positive))
    }

    /// Label of a division under this task, `None` when it is not used.
    pub fn label_of(&self, d: Division) -> Option<ClassLabel> {
        if self.negative.contains(&d) {
            Some(ClassLabel::Negative)
        } else if self.positive.contains(&d) {
            Some(ClassLabel::Positive)
        } else {
            None
        }
    }
}

impl Default for Task {
    fn default() -> Self {
        Task {
            negative: vec![Division::A],
            positive: vec![Division::E],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the dataset root.
    pub path: PathBuf,
    pub subject: SubjectId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub rate: f64,
    pub task: Task,
    pub groups: BTreeMap<Division, Vec<ManifestEntry>>,
}

pub const MANIFEST_FILE: &str = "manifest";

fn default_subject(path: &Path) -> SubjectId {
    SubjectId::new(path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()))
}

impl DatasetManifest {
    /// Reads `key = value` settings (`rate`, `task`) and `[A]`…`[E]` file
    /// lists. A line `file = subject` overrides the default subject id (the
    /// file stem). Divisions without a section are scanned as `<root>/<X>/*.txt`.
    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let doc = KeyValueDoc::parse(text).map_err(|e| Error::data(format!("manifest: {e}")))?;
        let rate: f64 = doc
            .parse_value(None, "rate")
            .map_err(|e| Error::data(format!("manifest: {e}")))?
            .ok_or_else(|| Error::data("manifest: missing 'rate'"))?;
        let task = match doc.get(None, "task") {
            Some(t) => Task::parse(t).map_err(|e| Error::data(format!("manifest: {e}")))?,
            None => Task::default(),
        };
        let mut groups = BTreeMap::new();
        for s in &doc.sections {
            let [c] = s.name.chars().collect::<Vec<_>>()[..] else {
                return Err(Error::data(format!("manifest line {}: unknown section [{}]", s.line, s.name)));
            };
            let div = Division::from_letter(c).map_err(|e| Error::data(format!("manifest line {}: {e}", s.line)))?;
            let entries = s
                .entries
                .iter()
                .map(|e| {
                    let path = PathBuf::from(&e.key);
                    let path = if path.components().count() == 1 {
                        PathBuf::from(div.letter().to_string()).join(path)
                    } else {
                        path
                    };
                    ManifestEntry {
                        subject: e.value.as_ref().map_or_else(|| default_subject(&path), |v| SubjectId::new(v.clone())),
                        path,
                    }
                })
                .collect();
            groups.insert(div, entries);
        }
        let mut m = DatasetManifest { rate, task, groups };
        m.scan_missing(root)?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::data(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::parse(&text, root)
    }

    /// Manifest for a bare `<root>/<X>/*.txt` tree.
    pub fn scan(root: &Path, rate: f64, task: Task) -> Result<Self> {
        let mut m = DatasetManifest {
            rate,
            task,
            groups: BTreeMap::new(),
        };
        m.scan_missing(root)?;
        m.validate()?;
        Ok(m)
    }

    fn scan_missing(&mut self, root: &Path) -> Result<()> {
        for div in Division::ALL {
            if self.groups.contains_key(&div) {
                continue;
            }
            let dir = root.join(div.letter().to_string());
            let Ok(read) = std::fs::read_dir(&dir) else { continue };
            let mut files: Vec<PathBuf> = read
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("txt")))
                .filter_map(|p| p.strip_prefix(root).ok().map(Path::to_path_buf))
                .collect();
            files.sort();
            if !files.is_empty() {
                self.groups.insert(
                    div,
                    files
                        .into_iter()
                        .map(|path| ManifestEntry {
                            subject: default_subject(&path),
                            path,
                        })
                        .collect(),
                );
            }
        }
        Ok(())
    }

    /// Every file in exactly one division; every subject in exactly one division.
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::data(format!("manifest: rate must be positive, got {}", self.rate)));
        }
        let mut files = BTreeSet::new();
        let mut subjects: BTreeMap<&SubjectId, Division> = BTreeMap::new();
        for (&div, entries) in &self.groups {
            for e in entries {
                if !files.insert(&e.path) {
                    return Err(Error::data(format!("manifest: {} listed more than once", e.path.display())));
                }
                if let Some(&prev) = subjects.get(&e.subject) {
                    if prev != div {
                        return Err(Error::data(format!(
                            "manifest: subject {} appears in divisions {prev} and {div}",
                            e.subject
                        )));
                    }
                }
                subjects.insert(&e.subject, div);
            }
        }
        Ok(())
    }

    /// Manifest text that [`DatasetManifest::parse`] reads back unchanged.
    pub fn render(&self) -> String {
        let mut out = format!("rate = {}\ntask = {}\n", self.rate, self.task.name());
        for (div, entries) in &self.groups {
            out.push_str(&format!("\n[{div}]\n"));
            for e in entries {
                out.push_str(&format!("{} = {}\n", e.path.display(), e.subject));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_labels() {
        assert_eq!(Division::A.label(), ClassLabel::Negative);
        assert_eq!(Division::B.label(), ClassLabel::Negative);
        for d in [Division::C, Division::D, Division::E] {
            assert_eq!(d.label(), ClassLabel::Positive);
        }
    }

    #[test]
    fn task_parsing() {
        let t = Task::parse("CD_vs_E").unwrap();
        assert_eq!(t.negative, vec![Division::C, Division::D]);
        assert_eq!(t.label_of(Division::E), Some(ClassLabel::Positive));
        assert_eq!(t.label_of(Division::A), None);
        assert_eq!(Task::parse("AB_vs_CDE").unwrap().name(), "AB_vs_CDE");
        assert!(Task::parse("A_vs_A").is_err());
        assert!(Task::parse("AvsE").is_err());
        assert!(Task::parse("A_vs_Q").is_err());
    }

    #[test]
    fn manifest_round_trip_and_checks() {
        let root = Path::new("/nonexistent");
        let m = DatasetManifest::parse("rate = 173.61\ntask = A_vs_E\n[A]\nZ001.txt\nZ002.txt = s2\n[E]\nS001.txt\n", root).unwrap();
        assert_eq!(m.groups[&Division::A][0].path, PathBuf::from("A/Z001.txt"));
        assert_eq!(m.groups[&Division::A][1].subject, SubjectId::new("s2"));
        assert_eq!(DatasetManifest::parse(&m.render(), root).unwrap(), m);

        assert!(DatasetManifest::parse("[A]\nx.txt\n", root).is_err());
        assert!(DatasetManifest::parse("rate = 1\n[A]\nx.txt\n[E]\nA/x.txt\n", root).is_err());
        assert!(DatasetManifest::parse("rate = 1\n[A]\nx.txt = s\n[E]\ny.txt = s\n", root).is_err());
        assert!(DatasetManifest::parse("rate = 1\n[Q]\nx.txt\n", root).is_err());
    }
}
