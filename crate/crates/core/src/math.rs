//! Thin wrappers over `libm` so kernels read like ordinary float code.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Sum with a fixed pairwise tree so results do not depend on chunking.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 256;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    const LEAF: usize = 256;
    if a.len() <= LEAF {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        pairwise_sum(values) / values.len() as f64
    }
}

/// Removes the constant component.
pub(crate) fn project_zero_mean(values: &mut [f64]) -> f64 {
    let m = mean(values);
    for v in values.iter_mut() {
        *v -= m;
    }
    m
}
