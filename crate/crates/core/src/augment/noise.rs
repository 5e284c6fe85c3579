use super::{Sources, SyntheticBatch};
use crate::{Error, Result};

/// Oracle filters on Mixup pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// ȳᵢ ≠ yⱼ and ȳⱼ ≠ yᵢ.
    MixupNf,
    /// yᵢ = yⱼ.
    IntraClass,
    /// yᵢ ≠ yⱼ plus the noise-free condition.
    ExtraClass,
}

/// True when some source's complementary label names another source's class.
pub fn is_noisy(sources: &Sources, y: &[usize], ybar: &[usize]) -> bool {
    let idx = sources.indices();
    idx.iter().enumerate().any(|(a, &i)| {
        idx.iter()
            .enumerate()
            .any(|(b, &j)| a != b && ybar[i] == y[j])
    })
}

fn check_lengths(y: &[usize], ybar: &[usize]) -> Result<()> {
    if y.len() != ybar.len() {
        return Err(Error::Shape(format!(
            "{} ordinary labels vs {} complementary labels",
            y.len(),
            ybar.len()
        )));
    }
    Ok(())
}

fn check_sources(sources: &[Sources], n: usize) -> Result<()> {
    match sources.iter().flat_map(Sources::indices).find(|&i| i >= n) {
        Some(i) => Err(Error::Shape(format!("source index {i} outside {n} labels"))),
        None => Ok(()),
    }
}

/// Fraction of source tuples that are noisy; 0 for an empty list.
pub fn noise_ratio(sources: &[Sources], y: &[usize], ybar: &[usize]) -> Result<f64> {
    check_lengths(y, ybar)?;
    check_sources(sources, y.len())?;
    if sources.is_empty() {
        return Ok(0.0);
    }
    let noisy = sources.iter().filter(|s| is_noisy(s, y, ybar)).count();
    Ok(noisy as f64 / sources.len() as f64)
}

pub fn passes(mode: FilterMode, sources: &Sources, y: &[usize], ybar: &[usize]) -> bool {
    let idx = sources.indices();
    let same_class = idx.iter().all(|&i| y[i] == y[idx[0]]);
    match mode {
        FilterMode::MixupNf => !is_noisy(sources, y, ybar),
        FilterMode::IntraClass => same_class,
        FilterMode::ExtraClass => !same_class && !is_noisy(sources, y, ybar),
    }
}

/// Positions of the source tuples that survive the filter.
pub fn oracle_filter(sources: &[Sources], y: Option<&[usize]>, ybar: &[usize], mode: FilterMode) -> Result<Vec<usize>> {
    let y = y.ok_or(Error::MissingOracle("oracle filtering"))?;
    check_lengths(y, ybar)?;
    check_sources(sources, y.len())?;
    Ok(sources
        .iter()
        .enumerate()
        .filter(|(_, s)| passes(mode, s, y, ybar))
        .map(|(k, _)| k)
        .collect())
}

/// Counts over a list of source tuples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairStats {
    pub tuples: usize,
    pub same_class: usize,
    pub noisy: usize,
    pub pass_mixup_nf: usize,
    pub pass_intra_class: usize,
    pub pass_extra_class: usize,
}

impl PairStats {
    pub fn noise_ratio(&self) -> f64 {
        if self.tuples == 0 {
            0.0
        } else {
            self.noisy as f64 / self.tuples as f64
        }
    }
}

pub fn pair_stats(batch: &SyntheticBatch, y: &[usize], ybar: &[usize]) -> Result<PairStats> {
    check_lengths(y, ybar)?;
    check_sources(&batch.sources, y.len())?;
    let mut s = PairStats::default();
    for src in &batch.sources {
        s.tuples += 1;
        s.noisy += usize::from(is_noisy(src, y, ybar));
        s.same_class += usize::from(passes(FilterMode::IntraClass, src, y, ybar));
        s.pass_mixup_nf += usize::from(passes(FilterMode::MixupNf, src, y, ybar));
        s.pass_intra_class += usize::from(passes(FilterMode::IntraClass, src, y, ybar));
        s.pass_extra_class += usize::from(passes(FilterMode::ExtraClass, src, y, ybar));
    }
    Ok(s)
}
