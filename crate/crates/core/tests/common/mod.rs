//! Shared oracles for the integration suites.
//!
//! Each oracle recomputes a quantity under test with a different algorithm
//! or an independent statistics stack, so agreement is evidence of
//! correctness rather than two copies of the same code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use upfkit::corpus::{Corpus, Label, NewsItem, SharingEvent, User};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// rows. Entirely unrelated to the tridiagonal QL solver in the library.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// PCA reference: sample covariance eigendecomposition via `jacobi_eigen`,
/// with the same sign canonicalization the library documents (the entry of
/// largest magnitude is made positive).
pub struct PcaOracle {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

pub fn pca_oracle(matrix: &[Vec<f64>], out_dim: usize) -> PcaOracle {
    let n = matrix.len();
    let dim = matrix[0].len();
    let mut mean = vec![0.0; dim];
    for row in matrix {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in matrix {
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / (n as f64 - 1.0);
            }
        }
    }
    let (eigenvalues, eigenvectors) = jacobi_eigen(&cov);
    let mut components = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for rank in 0..out_dim {
        let mut component = eigenvectors[rank].clone();
        let mut max_idx = 0;
        for (i, value) in component.iter().enumerate() {
            if value.abs() > component[max_idx].abs() {
                max_idx = i;
            }
        }
        if component[max_idx] < 0.0 {
            for value in component.iter_mut() {
                *value = -*value;
            }
        }
        components.push(component);
        explained_variance.push(eigenvalues[rank].max(0.0));
    }
    PcaOracle {
        mean,
        components,
        explained_variance,
    }
}

/// Welch reference: sum-of-squares variance arithmetic and an independent
/// statistics stack for the t CDF. Returns (t, df, two-sided p).
pub fn welch_oracle(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n_a = xs.len() as f64;
    let n_b = ys.len() as f64;
    let sum_a: f64 = xs.iter().sum();
    let sum_b: f64 = ys.iter().sum();
    let mean_a = sum_a / n_a;
    let mean_b = sum_b / n_b;
    let ss_a: f64 = xs.iter().map(|x| x * x).sum::<f64>() - n_a * mean_a * mean_a;
    let ss_b: f64 = ys.iter().map(|y| y * y).sum::<f64>() - n_b * mean_b * mean_b;
    let var_a = ss_a / (n_a - 1.0);
    let var_b = ss_b / (n_b - 1.0);
    let se_a = var_a / n_a;
    let se_b = var_b / n_b;
    let t = (mean_a - mean_b) / (se_a + se_b).sqrt();
    let df = (se_a + se_b) * (se_a + se_b)
        / (se_a * se_a / (n_a - 1.0) + se_b * se_b / (n_b - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid df");
    let p = 2.0 * dist.cdf(-t.abs());
    (t, df, p)
}

/// Linear-interpolation quantile over a sorted copy, h = q(n−1).
pub fn quantile_oracle(sample: &[f64], q: f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Brute-force reference for group selection.
///
/// Counts with hash maps over raw events, ranks with tuple keys, applies
/// the closed FR bands, and equalizes with the documented seeded sample
/// (ChaCha8 index sample over the ascending candidate list; fake side uses
/// the seed, real side seed+1).
pub fn grouping_oracle(
    corpus: &Corpus,
    k: usize,
    t: f64,
    seed: u64,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut fake_news: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut real_news: HashMap<&str, HashSet<&str>> = HashMap::new();
    for share in &corpus.shares {
        let target = match corpus.news[&share.news_id].label {
            Label::Fake => &mut fake_news,
            Label::Real => &mut real_news,
        };
        target
            .entry(share.user_id.as_str())
            .or_default()
            .insert(share.news_id.as_str());
    }

    let sharers: HashSet<&str> = fake_news.keys().chain(real_news.keys()).copied().collect();
    let mut pure_fake: Vec<(&str, usize)> = Vec::new();
    let mut pure_real: Vec<(&str, usize)> = Vec::new();
    let mut mixed: Vec<(&str, f64)> = Vec::new();
    for user in sharers {
        let nf = fake_news.get(user).map_or(0, HashSet::len);
        let nr = real_news.get(user).map_or(0, HashSet::len);
        match (nf > 0, nr > 0) {
            (true, false) => pure_fake.push((user, nf)),
            (false, true) => pure_real.push((user, nr)),
            (true, true) => mixed.push((user, nf as f64 / (nf + nr) as f64)),
            (false, false) => unreachable!(),
        }
    }

    let top = |mut side: Vec<(&str, usize)>| -> BTreeSet<String> {
        side.sort_by_key(|(id, n)| (usize::MAX - n, id.to_string()));
        side.into_iter()
            .take(k)
            .map(|(id, _)| id.to_string())
            .collect()
    };
    let mut u_fake = top(pure_fake);
    let mut u_real = top(pure_real);
    for (user, fr) in mixed {
        if fr >= 1.0 - t {
            u_fake.insert(user.to_string());
        } else if fr <= t {
            u_real.insert(user.to_string());
        }
    }

    let target = u_fake.len().min(u_real.len());
    let sample = |set: BTreeSet<String>, target: usize, seed: u64| -> BTreeSet<String> {
        if set.len() <= target {
            return set;
        }
        let ordered: Vec<String> = set.into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, ordered.len(), target)
            .into_iter()
            .map(|i| ordered[i].clone())
            .collect()
    };
    (
        sample(u_fake, target, seed),
        sample(u_real, target, seed.wrapping_add(1)),
    )
}

/// Random sharing corpus for the grouping equivalence sweep: up to
/// `max_users` users and `max_news` news items, distinct share pairs.
pub fn random_share_corpus(seed: u64, max_users: usize, max_news: usize) -> Corpus {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.random_range(10..=max_users);
    let n_news = rng.random_range(4..=max_news);
    let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();

    let mut users = BTreeMap::new();
    for i in 0..n_users {
        let id = format!("u{i:03}");
        users.insert(
            id.clone(),
            User {
                user_id: id,
                verified: false,
                registered_at: date,
                status_count: 0,
                favor_count: 0,
                follower_count: 0,
                following_count: 0,
                interest_tokens: vec![],
            },
        );
    }
    let mut news = BTreeMap::new();
    for i in 0..n_news {
        let id = format!("n{i:03}");
        let label = if rng.random_bool(0.5) {
            Label::Fake
        } else {
            Label::Real
        };
        news.insert(id.clone(), NewsItem { news_id: id, label });
    }

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let target_shares = rng.random_range(n_users..=n_users * 4);
    for _ in 0..target_shares * 3 {
        if pairs.len() >= target_shares {
            break;
        }
        pairs.insert((rng.random_range(0..n_users), rng.random_range(0..n_news)));
    }
    let shares = pairs
        .into_iter()
        .map(|(u, n)| SharingEvent {
            user_id: format!("u{u:03}"),
            news_id: format!("n{n:03}"),
        })
        .collect();

    Corpus {
        users,
        news,
        shares,
        tweets: vec![],
        reference_date: date,
    }
}
