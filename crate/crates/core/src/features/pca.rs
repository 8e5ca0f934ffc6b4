//! Principal component analysis for image-class distributions.
//!
//! The profile-image channel arrives as a 1000-dimensional class distribution
//! per user; PCA reduces it to a handful of components before it joins the
//! feature vector. Fitting computes the sample covariance (n−1 denominator)
//! and decomposes it with Householder tridiagonalization followed by implicit
//! QL iteration, the standard dense symmetric eigensolver. Components are
//! returned eigenvalue-descending with each one's sign fixed so its
//! largest-magnitude entry is positive, making the decomposition unique.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PCAModel {
    pub mean: Vec<f64>,
    /// out_dim rows, each an orthonormal direction in input space.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues for the kept components, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// Fit a PCA model on `matrix` (rows are observations).
pub fn fit_pca(matrix: &[Vec<f64>], out_dim: usize) -> Result<PCAModel> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs ≥2 rows, got {n}"
        )));
    }
    let dim = matrix[0].len();
    if matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidInput("ragged PCA input matrix".into()));
    }
    if out_dim == 0 || out_dim > n.min(dim) {
        return Err(Error::InvalidInput(format!(
            "out_dim {out_dim} outside [1, min(rows={n}, cols={dim})]"
        )));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in PCA input".into()));
    }

    let mut mean = vec![0.0; dim];
    for row in matrix {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = vec![vec![0.0; dim]; dim];
    for row in matrix {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            let ci = centered[i];
            for j in i..dim {
                cov[i][j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }

    let (eigenvalues, eigenvectors) = symmetric_eigen(cov);

    // Ascending from the solver; keep the top out_dim in descending order.
    let mut components = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for rank in 0..out_dim {
        let col = dim - 1 - rank;
        let mut component: Vec<f64> = (0..dim).map(|r| eigenvectors[r][col]).collect();
        fix_sign(&mut component);
        components.push(component);
        explained_variance.push(eigenvalues[col].max(0.0));
    }

    Ok(PCAModel {
        mean,
        components,
        explained_variance,
    })
}

fn fix_sign(component: &mut [f64]) {
    let mut max_idx = 0;
    for (i, v) in component.iter().enumerate() {
        if v.abs() > component[max_idx].abs() {
            max_idx = i;
        }
    }
    if component[max_idx] < 0.0 {
        for v in component.iter_mut() {
            *v = -*v;
        }
    }
}

impl PCAModel {
    pub fn out_dim(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Project an input vector: components · (v − mean).
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::InvalidInput(format!(
                "projection input has {} dims, model expects {}",
                v.len(),
                self.mean.len()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(v.iter().zip(&self.mean))
                    .map(|(c, (x, m))| c * (x - m))
                    .sum()
            })
            .collect())
    }
}

/// Eigendecomposition of a dense symmetric matrix, eigenvalues ascending.
/// Returns (eigenvalues, V) with eigenvector j stored in column j of V.
///
/// Householder reduction to tridiagonal form followed by implicitly shifted
/// QL iteration (the EISPACK tred2/tql2 pair).
pub fn symmetric_eigen(a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = a;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    if n == 0 {
        return (d, v);
    }
    if n == 1 {
        let val = v[0][0];
        return (vec![val], vec![vec![1.0]]);
    }

    // Householder tridiagonalization.
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder transformations.
    for i in 0..(n - 1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;

    // Implicit QL iteration on the tridiagonal (d, e).
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut().take(n) {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort eigenpairs ascending.
    for i in 0..(n - 1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d.swap(k, i);
            for row in v.iter_mut() {
                row.swap(k, i);
            }
        }
    }

    (d, v)
}

/// Read `image_classes.csv` with header `user_id,c0,...,c{dim-1}`.
pub fn load_image_classes(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let width = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .len();
    if width < 2 {
        return Err(Error::parse(path, 1, "expected user_id plus class columns"));
    }
    let mut out = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2;
        let record = record.map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        if record.len() != width {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, got {}", width, record.len()),
            ));
        }
        let user_id = record.get(0).unwrap().to_string();
        let mut values = Vec::with_capacity(width - 1);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|e| Error::parse(path, line_no, format!("bad class value: {e}")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, "non-finite class value"));
            }
            values.push(v);
        }
        out.insert(user_id, values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_have_one_component() {
        // Points on y = 2x: all variance along one direction.
        let data: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let model = fit_pca(&data, 2).unwrap();
        let total: f64 = model.explained_variance.iter().sum();
        assert!(model.explained_variance[0] / total > 1.0 - 1e-12);
        assert!(model.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let data = vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 0.0, 1.0],
            vec![2.0, 2.0, 2.0],
            vec![0.5, 1.5, 7.0],
        ];
        let model = fit_pca(&data, 2).unwrap();
        let projected = model.project(&model.mean.clone()).unwrap();
        for v in projected {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_frozen_reference_decomposition() {
        // Expected values computed with an independent linear algebra stack.
        let data = vec![
            vec![2.5, 2.4, 0.5],
            vec![0.5, 0.7, 1.1],
            vec![2.2, 2.9, 0.3],
            vec![1.9, 2.2, 0.8],
            vec![3.1, 3.0, 0.2],
        ];
        let model = fit_pca(&data, 3).unwrap();
        let expected_mean = [2.04, 2.24, 0.58];
        let expected_eigenvalues = [
            1.860733025540025,
            0.055389920050696,
            0.011877054409279,
        ];
        let expected_components = [
            [0.699262432229066, 0.666403518480690, -0.258724566730041],
            [0.712533140588499, -0.678941358365221, 0.177017387463148],
            [0.057693798940446, 0.308131436983871, 0.949592777513642],
        ];
        for (got, want) in model.mean.iter().zip(expected_mean) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in model.explained_variance.iter().zip(expected_eigenvalues) {
            assert!((got - want).abs() < 1e-10, "eigenvalue {got} vs {want}");
        }
        for (got, want) in model.components.iter().zip(expected_components) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-10, "component entry {g} vs {w}");
            }
        }
        let projected = model.project(&data[0]).unwrap();
        assert!((projected[0] - 0.448983247120684).abs() < 1e-10);
        assert!((projected[1] - 0.204973236335222).abs() < 1e-10);
    }

    #[test]
    fn components_are_orthonormal() {
        let mut state = 123456789u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let data: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..8).map(|_| next() * 10.0 - 5.0).collect())
            .collect();
        let model = fit_pca(&data, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = model.components[i]
                    .iter()
                    .zip(&model.components[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9, "gram[{i}][{j}] = {dot}");
            }
        }
        for w in model.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    #[test]
    fn out_dim_beyond_rank_bounds_rejected() {
        let data = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.5]];
        assert!(fit_pca(&data, 3).is_err());
        assert!(fit_pca(&data, 0).is_err());
    }

    #[test]
    fn non_finite_entries_rejected() {
        let data = vec![vec![1.0, f64::NAN], vec![3.0, 4.0]];
        assert!(fit_pca(&data, 1).is_err());
    }
}
