use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, SubjectId};

pub const DEFAULT_INNER_FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerSplit {
    pub train: Vec<SubjectId>,
    pub validation: Vec<SubjectId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuterFold {
    pub test: SubjectId,
    pub train: Vec<SubjectId>,
    /// Empty when fewer than two training subjects remain.
    pub inner: Vec<InnerSplit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub outer: Vec<OuterFold>,
    pub inner_k: usize,
    pub seed: u64,
}

/// One outer fold per subject; the remaining subjects are shuffled and dealt
/// into `inner_k` validation groups.
pub fn build_loso_plan(subjects: &[SubjectId], inner_k: usize, seed: u64) -> Result<CvPlan> {
    let strata: Vec<(SubjectId, Option<ClassLabel>)> = subjects.iter().map(|s| (s.clone(), None)).collect();
    build(&strata, inner_k, seed)
}

/// As [`build_loso_plan`], but inner groups are dealt class by class so each
/// validation group mixes both classes where possible.
pub fn build_loso_plan_stratified(subjects: &[(SubjectId, ClassLabel)], inner_k: usize, seed: u64) -> Result<CvPlan> {
    let strata: Vec<(SubjectId, Option<ClassLabel>)> = subjects.iter().map(|(s, l)| (s.clone(), Some(*l))).collect();
    build(&strata, inner_k, seed)
}

fn build(subjects: &[(SubjectId, Option<ClassLabel>)], inner_k: usize, seed: u64) -> Result<CvPlan> {
    if subjects.len() < 2 {
        return Err(Error::param(format!("LOSO needs at least 2 subjects, got {}", subjects.len())));
    }
    if inner_k == 0 {
        return Err(Error::param("inner fold count must be at least 1"));
    }
    let mut seen = BTreeSet::new();
    if let Some((dup, _)) = subjects.iter().find(|(s, _)| !seen.insert(s)) {
        return Err(Error::param(format!("subject {dup} listed twice")));
    }
    let outer = subjects
        .iter()
        .enumerate()
        .map(|(f, (test, _))| {
            let rest: Vec<&(SubjectId, Option<ClassLabel>)> = subjects.iter().filter(|(s, _)| s != test).collect();
            let train: Vec<SubjectId> = rest.iter().map(|(s, _)| s.clone()).collect();
            let inner = if rest.len() < 2 {
                Vec::new()
            } else {
                inner_splits(&rest, inner_k.min(rest.len()), fold_seed(seed, f))
            };
            OuterFold {
                test: test.clone(),
                train,
                inner,
            }
        })
        .collect();
    Ok(CvPlan { outer, inner_k, seed })
}

fn inner_splits(rest: &[&(SubjectId, Option<ClassLabel>)], k: usize, seed: u64) -> Vec<InnerSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_stratum: BTreeMap<Option<i32>, Vec<SubjectId>> = BTreeMap::new();
    for (s, l) in rest {
        by_stratum.entry(l.map(|l| l.value())).or_default().push(s.clone());
    }
    let mut dealt = Vec::with_capacity(rest.len());
    for group in by_stratum.values_mut() {
        group.shuffle(&mut rng);
        dealt.extend(group.iter().cloned());
    }
    let mut groups = vec![Vec::new(); k];
    for (i, s) in dealt.into_iter().enumerate() {
        groups[i % k].push(s);
    }
    (0..k)
        .map(|v| InnerSplit {
            validation: groups[v].clone(),
            train: groups
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != v)
                .flat_map(|(_, m)| m.iter().cloned())
                .collect(),
        })
        .collect()
}

/// Stratified `k`-fold split of every subject, for searches run outside an
/// outer fold.
pub fn subject_folds(subjects: &[(SubjectId, ClassLabel)], k: usize, seed: u64) -> Result<Vec<InnerSplit>> {
    if subjects.len() < 2 || k < 2 {
        return Err(Error::param("subject folds need at least 2 subjects and 2 folds"));
    }
    let strata: Vec<(SubjectId, Option<ClassLabel>)> = subjects.iter().map(|(s, l)| (s.clone(), Some(*l))).collect();
    let refs: Vec<&(SubjectId, Option<ClassLabel>)> = strata.iter().collect();
    Ok(inner_splits(&refs, k.min(subjects.len()), seed))
}

/// Per-fold seed derived from the plan seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl CvPlan {
    /// Checks the structural guarantees of the plan.
    pub fn validate(&self) -> Result<()> {
        let mut tests = BTreeSet::new();
        for (f, fold) in self.outer.iter().enumerate() {
            if !tests.insert(&fold.test) {
                return Err(Error::State(format!("subject {} tested twice", fold.test)));
            }
            if fold.train.contains(&fold.test) {
                return Err(Error::Leakage(format!("fold {f}: test subject {} in training set", fold.test)));
            }
            for split in &fold.inner {
                if split.train.contains(&fold.test) || split.validation.contains(&fold.test) {
                    return Err(Error::Leakage(format!("fold {f}: test subject {} in an inner split", fold.test)));
                }
            }
        }
        let all: BTreeSet<&SubjectId> = self.outer.iter().flat_map(|f| f.train.iter().chain([&f.test])).collect();
        if all != tests {
            return Err(Error::State("outer test sets do not cover every subject".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<SubjectId> {
        (0..n).map(|i| SubjectId::new(format!("s{i}"))).collect()
    }

    #[test]
    fn three_subjects() {
        let plan = build_loso_plan(&ids(3), 5, 1).unwrap();
        assert_eq!(plan.outer.len(), 3);
        for f in &plan.outer {
            assert_eq!(f.train.len(), 2);
            assert_eq!(f.inner.len(), 2);
        }
        plan.validate().unwrap();
    }

    #[test]
    fn subject_never_in_own_training() {
        let plan = build_loso_plan(&ids(12), 5, 9).unwrap();
        plan.validate().unwrap();
        for f in &plan.outer {
            assert!(!f.train.contains(&f.test));
            for s in &f.inner {
                assert!(!s.train.contains(&f.test) && !s.validation.contains(&f.test));
                let mut union: Vec<_> = s.train.iter().chain(&s.validation).cloned().collect();
                union.sort();
                let mut train = f.train.clone();
                train.sort();
                assert_eq!(union, train);
            }
        }
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let a = build_loso_plan(&ids(10), 5, 3).unwrap();
        assert_eq!(a, build_loso_plan(&ids(10), 5, 3).unwrap());
        assert_ne!(a, build_loso_plan(&ids(10), 5, 4).unwrap());
    }

    #[test]
    fn too_few_subjects() {
        assert!(matches!(build_loso_plan(&ids(1), 5, 0), Err(Error::Parameter(_))));
        let two = build_loso_plan(&ids(2), 5, 0).unwrap();
        assert!(two.outer.iter().all(|f| f.inner.is_empty()));
    }

    #[test]
    fn stratified_groups_mix_classes() {
        let subjects: Vec<(SubjectId, ClassLabel)> = ids(10)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, if i < 5 { ClassLabel::Negative } else { ClassLabel::Positive }))
            .collect();
        let plan = build_loso_plan_stratified(&subjects, 4, 2).unwrap();
        plan.validate().unwrap();
        let label = |s: &SubjectId| subjects.iter().find(|(t, _)| t == s).unwrap().1;
        for f in &plan.outer {
            for split in &f.inner {
                let pos = split.train.iter().filter(|s| label(s).is_positive()).count();
                assert!(pos > 0 && pos < split.train.len());
            }
        }
    }
}
