use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::loader::LabeledSeries;
use super::manifest::{DatasetManifest, ManifestEntry, Task, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Writes `<root>/<division>/<subject>.txt` (one sample per line, shortest
/// round-trip formatting) and a `manifest` that loads them back bit-equal.
pub fn export_cohort<T: Scalar>(items: &[LabeledSeries<T>], root: &Path, task: &Task) -> Result<DatasetManifest> {
    let rate = items
        .first()
        .map(|i| i.series.rate().as_f64())
        .ok_or_else(|| Error::param("nothing to export"))?;
    let mut groups: BTreeMap<_, Vec<ManifestEntry>> = BTreeMap::new();
    for it in items {
        let dir = it.division.letter().to_string();
        std::fs::create_dir_all(root.join(&dir)).map_err(|e| Error::io(root.join(&dir), e))?;
        let rel = PathBuf::from(&dir).join(format!("{}.txt", it.series.subject()));
        let path = root.join(&rel);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for v in it.series.samples() {
            writeln!(w, "{v}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        groups.entry(it.division).or_default().push(ManifestEntry {
            path: rel,
            subject: it.series.subject().clone(),
        });
    }
    let manifest = DatasetManifest {
        rate,
        task: task.clone(),
        groups,
    };
    manifest.validate()?;
    let path = root.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.render()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{generate_cohort, load_directory, SynthCohortSpec};

    #[test]
    fn written_cohort_loads_bit_equal() {
        let spec = SynthCohortSpec {
            subjects_per_class: 2,
            epochs_per_subject: 3,
            seed: 8,
            ..SynthCohortSpec::default()
        };
        let cohort = generate_cohort::<f64>(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = export_cohort(&cohort.items, dir.path(), &Task::default()).unwrap();
        let read = DatasetManifest::read(dir.path()).unwrap();
        assert_eq!(read, m);
        let back: Vec<LabeledSeries<f64>> = load_directory(dir.path(), &read).unwrap();
        assert_eq!(back.len(), cohort.items.len());
        for (a, b) in back.iter().zip(&cohort.items) {
            assert_eq!(a.series.subject(), b.series.subject());
            assert_eq!(a.label, b.label);
            let bits = |s: &[f64]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a.series.samples()), bits(b.series.samples()));
        }

        let again = tempfile::tempdir().unwrap();
        export_cohort(&cohort.items, again.path(), &Task::default()).unwrap();
        for rel in ["manifest", "A/h00.txt", "E/i01.txt"] {
            assert_eq!(std::fs::read(dir.path().join(rel)).unwrap(), std::fs::read(again.path().join(rel)).unwrap());
        }
    }
}
