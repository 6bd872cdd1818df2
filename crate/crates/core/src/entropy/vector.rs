//! User feature vectors and the user/record entropies built on them.

use super::kinds::Basis;
use crate::scalar::{KahanSum, Scalar};

/// Feature of one record in the chosen basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureRow<'a, T> {
    /// POI-class probabilities of the record's cell.
    Dense(&'a [T]),
    /// Index of the containing division.
    OneHot(usize),
    /// No usable feature (empty profile, outside every division).
    Missing,
}

impl<T: Scalar> FeatureRow<'_, T> {
    pub fn is_usable(&self) -> bool {
        match self {
            FeatureRow::Dense(q) => q.iter().any(|v| !v.is_zero()),
            FeatureRow::OneHot(_) => true,
            FeatureRow::Missing => false,
        }
    }
}

/// A user's normalized distribution over classes or divisions.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFeatureVector<T> {
    pub mid: String,
    pub basis: Basis,
    pub p: Vec<T>,
    /// Records that contributed a usable row.
    pub n_effective: usize,
}

impl<T: Scalar> UserFeatureVector<T> {
    pub fn is_usable(&self) -> bool {
        self.n_effective > 0
    }
}

/// Sums the usable rows and normalizes across the `m` classes.
pub fn build_user_vector<'a, T, I>(mid: &str, basis: Basis, m: usize, rows: I) -> UserFeatureVector<T>
where
    T: Scalar,
    I: IntoIterator<Item = FeatureRow<'a, T>>,
{
    let mut acc = vec![KahanSum::<T>::new(); m];
    let mut n_effective = 0;
    for row in rows {
        match row {
            FeatureRow::Dense(q) if row.is_usable() => {
                debug_assert_eq!(q.len(), m);
                for (a, &v) in acc.iter_mut().zip(q) {
                    a.add(v);
                }
            }
            FeatureRow::OneHot(j) => acc[j].add(T::one()),
            _ => continue,
        }
        n_effective += 1;
    }
    let sums: Vec<T> = acc.iter().map(KahanSum::value).collect();
    let total = sums.iter().copied().collect::<KahanSum<T>>().value();
    let p = if n_effective > 0 && total > T::zero() {
        sums.into_iter().map(|s| s / total).collect()
    } else {
        n_effective = 0;
        vec![T::zero(); m]
    };
    UserFeatureVector { mid: mid.to_owned(), basis, p, n_effective }
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy<T: Scalar>(p: &[T]) -> T {
    p.iter().filter(|v| **v > T::zero()).map(|&v| -(v * v.ln())).collect::<KahanSum<T>>().value().max(T::zero())
}

/// Entropy of a usable user vector, in nats.
pub fn user_entropy<T: Scalar>(v: &UserFeatureVector<T>) -> Option<T> {
    v.is_usable().then(|| shannon_entropy(&v.p))
}

/// Cross-entropy share of one record: `-Σ q_j ln p_j`. `None` for an
/// all-zero row.
pub fn record_entropy<T: Scalar>(q: &[T], p: &[T]) -> Option<T> {
    if q.iter().all(|v| v.is_zero()) {
        return None;
    }
    Some(
        q.iter()
            .zip(p)
            .filter(|(qj, _)| **qj > T::zero())
            .map(|(&qj, &pj)| -(qj * pj.ln()))
            .collect::<KahanSum<T>>()
            .value(),
    )
}

/// [`record_entropy`] for any feature row.
pub fn record_entropy_of_row<T: Scalar>(row: FeatureRow<'_, T>, p: &[T]) -> Option<T> {
    match row {
        FeatureRow::Dense(q) => record_entropy(q, p),
        FeatureRow::OneHot(j) => Some(-p[j].ln()),
        FeatureRow::Missing => None,
    }
}
