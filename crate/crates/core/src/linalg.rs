//! Small dense linear algebra: row-major matrices, LU with partial pivoting.
//!
//! Problem sizes here are tiny (network matrices for desk-scale systems,
//! simplex basis refactorization, hull facet normals), so a straightforward
//! dense implementation is both sufficient and fully deterministic.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// Matrix-matrix product.
    pub fn mul_mat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Inverse via LU with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let lu = Lu::factor(self)?;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Mat) -> Option<Lu> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best < 1e-12 {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= factor * v;
                }
            }
        }
        Some(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        y
    }
}

/// Solve `A x = b`; `None` when `A` is singular.
#[cfg_attr(not(test), allow(dead_code))]
pub fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    Lu::factor(a).map(|lu| lu.solve(b))
}

/// Determinant via Gaussian elimination with partial pivoting.
pub fn det(a: &Mat) -> f64 {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut sign = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = m[(k, k)].abs();
        for i in k + 1..n {
            let v = m[(i, k)].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            sign = -sign;
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let factor = m[(i, k)] / pivot;
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= factor * v;
            }
        }
    }
    let mut d = sign;
    for k in 0..n {
        d *= m[(k, k)];
    }
    d
}

/// One unit vector orthogonal to all given rows (an (d-1) x d system's
/// nullspace direction); `None` when the rows are rank-deficient.
pub fn nullspace_direction(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 {
        return None;
    }
    let d = rows[0].len();
    debug_assert!(m < d);
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut pivot_cols = Vec::with_capacity(m);
    let mut row = 0usize;
    let mut used = vec![false; d];
    while row < m {
        // pick the largest remaining entry in unused columns of this row
        // block (partial pivoting over both rows and columns)
        let mut best = (row, 0usize, 0.0f64);
        for i in row..m {
            for (j, &u) in used.iter().enumerate() {
                if !u && a[i][j].abs() > best.2 {
                    best = (i, j, a[i][j].abs());
                }
            }
        }
        let (pi, pj, mag) = best;
        if mag < 1e-12 {
            return None; // rank deficient
        }
        a.swap(row, pi);
        used[pj] = true;
        pivot_cols.push(pj);
        let pivot = a[row][pj];
        for i in 0..m {
            if i != row && a[i][pj] != 0.0 {
                let factor = a[i][pj] / pivot;
                for j in 0..d {
                    let v = a[row][j];
                    a[i][j] -= factor * v;
                }
                a[i][pj] = 0.0;
            }
        }
        row += 1;
    }
    // set the first free column to 1, back-substitute the pivots
    let free = (0..d).find(|&j| !used[j])?;
    let mut x = vec![0.0; d];
    x[free] = 1.0;
    for (r, &pj) in pivot_cols.iter().enumerate() {
        x[pj] = -a[r][free] / a[r][pj];
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-15 {
        return None;
    }
    for v in &mut x {
        *v /= norm;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_matches_nalgebra() {
        // fixed pseudo-random system, cross-checked against an independent
        // implementation
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [1usize, 2, 3, 5, 8] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| next() + if i == j { 2.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let a = Mat::from_rows(&rows);
            let x = solve(&a, &b).expect("nonsingular");

            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
            let nb = nalgebra::DVector::from_vec(b.clone());
            let nx = na.lu().solve(&nb).expect("nonsingular");
            for i in 0..n {
                assert!((x[i] - nx[i]).abs() < 1e-9, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn singular_detected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve(&a, &[1.0, 1.0]).is_none());
        assert!(a.inverse().is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let inv = a.inverse().unwrap();
        let prod = a.mul_mat(&inv);
        let id = Mat::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((prod[(i, j)] - id[(i, j)]).abs() < 1e-12);
            }
        }
    }
}
