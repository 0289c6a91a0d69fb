//! Reference classifiers: k-nearest neighbours and a Gaussian RBF network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ridge_solve, Matrix};
use crate::scalar::Scalar;
use crate::signal::ClassLabel;
use crate::standardize::Standardizer;

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Fraction of positive labels among the `k` nearest rows. Distance ties
/// resolve to the lower row index.
pub fn knn_score<T: Scalar>(k: usize, train: &[Vec<T>], labels: &[ClassLabel], x: &[T]) -> Result<T> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if k > train.len() {
        return Err(Error::param(format!("k = {k} exceeds the {} training rows", train.len())));
    }
    if train.len() != labels.len() {
        return Err(Error::param("training rows and labels differ in length"));
    }
    if let Some(r) = train.iter().find(|r| r.len() != x.len()) {
        return Err(Error::param(format!("query has {} features, training rows have {}", x.len(), r.len())));
    }
    let mut d: Vec<(T, usize)> = train.iter().enumerate().map(|(i, r)| (sq_dist(r, x), i)).collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let pos = d[..k].iter().filter(|(_, i)| labels[*i].is_positive()).count();
    Ok(T::from_usize_lossy(pos) / T::from_usize_lossy(k))
}

/// Majority label among the `k` nearest rows; an even split goes to the positive class.
pub fn knn<T: Scalar>(k: usize, train: &[Vec<T>], labels: &[ClassLabel], x: &[T]) -> Result<ClassLabel> {
    let s = knn_score(k, train, labels, x)?;
    Ok(if s >= T::lit(0.5) { ClassLabel::Positive } else { ClassLabel::Negative })
}

/// kNN on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KnnModel<T: Scalar> {
    pub k: usize,
    pub standardizer: Standardizer<T>,
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<ClassLabel>,
}

impl<T: Scalar> KnnModel<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[ClassLabel], k: usize) -> Result<Self> {
        if k == 0 || k > rows.len() {
            return Err(Error::param(format!("k = {k} must lie in 1..={}", rows.len())));
        }
        let standardizer = Standardizer::fit(rows)?;
        Ok(KnnModel {
            k,
            rows: standardizer.transform_all(rows)?,
            standardizer,
            labels: labels.to_vec(),
        })
    }

    pub fn score(&self, x: &[T]) -> Result<T> {
        knn_score(self.k, &self.rows, &self.labels, &self.standardizer.transform(x)?)
    }

    pub fn predict(&self, x: &[T]) -> Result<ClassLabel> {
        knn(self.k, &self.rows, &self.labels, &self.standardizer.transform(x)?)
    }
}

/// Gaussian bumps at fixed centres with a least-squares linear readout on ±1 targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RbfNetwork<T: Scalar> {
    pub standardizer: Standardizer<T>,
    pub centers: Vec<Vec<T>>,
    pub width: T,
    /// One weight per centre, then the bias.
    pub weights: Vec<T>,
}

/// Lloyd's algorithm from a k-means++ seeding.
pub fn kmeans<T: Scalar>(rows: &[Vec<T>], k: usize, seed: u64, max_iterations: usize) -> Result<Vec<Vec<T>>> {
    if k == 0 || k > rows.len() {
        return Err(Error::param(format!("k-means needs 1..={} centres, got {k}", rows.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![rows[rng.random_range(0..rows.len())].clone()];
    while centers.len() < k {
        let d: Vec<f64> = rows
            .iter()
            .map(|r| centers.iter().map(|c| sq_dist(r, c)).fold(T::infinity(), T::min).as_f64())
            .collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = rows.len() - 1;
            for (i, &di) in d.iter().enumerate() {
                if u < di {
                    pick = i;
                    break;
                }
                u -= di;
            }
            pick
        } else {
            rng.random_range(0..rows.len())
        };
        centers.push(rows[next].clone());
    }
    let dim = rows[0].len();
    let mut assign = vec![usize::MAX; rows.len()];
    for _ in 0..max_iterations {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let mut best = (T::infinity(), 0);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(r, c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            if assign[i] != best.1 {
                assign[i] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (j, c) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<T>> = rows.iter().zip(&assign).filter(|(_, &a)| a == j).map(|(r, _)| r).collect();
            if members.is_empty() {
                continue;
            }
            let n = T::from_usize_lossy(members.len());
            for d in 0..dim {
                c[d] = members.iter().map(|m| m[d]).sum::<T>() / n;
            }
        }
    }
    Ok(centers)
}

impl<T: Scalar> RbfNetwork<T> {
    /// Centres from k-means on standardized rows; width is the mean
    /// distance between centres (1 for a single centre).
    pub fn fit(rows: &[Vec<T>], labels: &[ClassLabel], n_centers: usize, ridge: T, seed: u64) -> Result<Self> {
        let standardizer = Standardizer::fit(rows)?;
        let z = standardizer.transform_all(rows)?;
        let centers = kmeans(&z, n_centers, seed, 100)?;
        let mut total = T::zero();
        let mut pairs = 0usize;
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                total += sq_dist(&centers[i], &centers[j]).sqrt();
                pairs += 1;
            }
        }
        let width = if pairs > 0 && total > T::zero() {
            total / T::from_usize_lossy(pairs)
        } else {
            T::one()
        };
        Self::fit_with_centers_standardized(standardizer, &z, labels, centers, width, ridge)
    }

    /// Uses the given centres (in raw feature units) and no standardization.
    pub fn fit_with_centers(
        rows: &[Vec<T>],
        labels: &[ClassLabel],
        centers: Vec<Vec<T>>,
        width: T,
        ridge: T,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        Self::fit_with_centers_standardized(Standardizer::identity(dim), rows, labels, centers, width, ridge)
    }

    fn fit_with_centers_standardized(
        standardizer: Standardizer<T>,
        z: &[Vec<T>],
        labels: &[ClassLabel],
        centers: Vec<Vec<T>>,
        width: T,
        ridge: T,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::param("RBF network needs at least one centre"));
        }
        if !(width > T::zero()) {
            return Err(Error::param("RBF width must be positive"));
        }
        if z.len() != labels.len() || z.is_empty() {
            return Err(Error::param("RBF training needs matching, non-empty rows and labels"));
        }
        let mut net = RbfNetwork {
            standardizer,
            centers,
            width,
            weights: Vec::new(),
        };
        let design: Vec<Vec<T>> = z.iter().map(|r| net.features(r)).collect();
        let y: Vec<T> = labels.iter().map(|l| l.signed()).collect();
        net.weights = ridge_solve(&Matrix::from_rows(&design), &y, ridge)?;
        Ok(net)
    }

    fn features(&self, z: &[T]) -> Vec<T> {
        let denom = T::lit(2.0) * self.width * self.width;
        let mut f: Vec<T> = self.centers.iter().map(|c| (-sq_dist(z, c) / denom).exp()).collect();
        f.push(T::one());
        f
    }

    /// Readout value; its sign is the class.
    pub fn score(&self, x: &[T]) -> Result<T> {
        let z = self.standardizer.transform(x)?;
        Ok(self.features(&z).iter().zip(&self.weights).map(|(&a, &b)| a * b).sum())
    }

    pub fn predict(&self, x: &[T]) -> Result<ClassLabel> {
        Ok(ClassLabel::from_score(self.score(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Negative as N, Positive as P};

    #[test]
    fn knn_examples() {
        let train = vec![vec![0.0], vec![1.0], vec![-1.0], vec![5.0]];
        let labels = [N, P, P, N];
        assert_eq!(knn(1, &train, &labels, &[5.0]).unwrap(), N);
        assert_eq!(knn(3, &train, &labels, &[0.0]).unwrap(), P);
        assert!(matches!(knn(5, &train, &labels, &[0.0]), Err(Error::Parameter(_))));
    }

    #[test]
    fn knn_distance_ties_take_lower_index() {
        let train = vec![vec![1.0], vec![-1.0]];
        assert_eq!(knn(1, &train, &[P, N], &[0.0]).unwrap(), P);
        assert_eq!(knn(1, &train, &[N, P], &[0.0]).unwrap(), N);
    }

    #[test]
    fn rbf_interpolates_with_tiny_width() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 0.5], vec![0.5, 2.0]];
        let labels = [P, N, N, P, N, P];
        let net = RbfNetwork::fit_with_centers(&rows, &labels, rows.clone(), 0.05, 1e-10).unwrap();
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(net.predict(r).unwrap(), l);
        }
    }

    #[test]
    fn kmeans_finds_separated_clusters() {
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64 * 0.01]);
            rows.push(vec![10.0 + i as f64 * 0.01]);
        }
        let mut c = kmeans(&rows, 2, 3, 50).unwrap();
        c.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((c[0][0] - 0.045).abs() < 1e-9);
        assert!((c[1][0] - 10.045).abs() < 1e-9);
    }
}
