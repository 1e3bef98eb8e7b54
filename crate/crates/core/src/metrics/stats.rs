use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks<T: PartialOrd>(values: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation of two rank vectors: the Pearson correlation of the
/// ranks as given. Ties should already carry average ranks.
pub fn spearman(rank_a: &[f64], rank_b: &[f64]) -> Result<f64> {
    if rank_a.len() != rank_b.len() {
        return Err(Error::Dimension("rank vectors differ in length".into()));
    }
    if rank_a.len() < 2 {
        return Err(Error::Undefined("Spearman correlation needs n ≥ 2".into()));
    }
    let (ma, mb) = (mean(rank_a), mean(rank_b));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (a, b) in rank_a.iter().zip(rank_b) {
        cov += (a - ma) * (b - mb);
        va += (a - ma) * (a - ma);
        vb += (b - mb) * (b - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Undefined("constant rank vector".into()));
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: f64,
    /// `p < 0.10`
    pub at_90: bool,
    /// `p < 0.05`
    pub at_95: bool,
}

/// Two-sample Student's t test with pooled variance.
///
/// Zero pooled variance gives `t = 0, p = 1` for equal means and
/// `t = ±∞, p = 0` otherwise.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("t test needs ≥ 2 samples per group".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (std_dev(a), std_dev(b));
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / df;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let (t, p) = if se == 0.0 {
        if ma == mb {
            (0.0, 1.0)
        } else {
            ((ma - mb).signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = (ma - mb) / se;
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(e.to_string()))?;
        let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
        (t, p)
    };
    Ok(SignificanceResult {
        t,
        p,
        df,
        at_90: p < 0.10,
        at_95: p < 0.05,
    })
}
