//! Dense LU factorisation with partial pivoting, `P B = L U`.

/// Pivots smaller than this (relative to the largest entry of `B`) mark the
/// basis as singular.
const SINGULAR_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct LuFactor {
    n: usize,
    /// L below the diagonal (unit diagonal implied), U on and above, row-major.
    lu: Vec<f64>,
    /// `perm[i]` is the row of `B` that ended up in position `i`.
    perm: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular {
    pub column: usize,
}

impl LuFactor {
    /// Factorises the `n x n` row-major matrix `b`.
    pub fn new(n: usize, mut b: Vec<f64>) -> Result<Self, Singular> {
        debug_assert_eq!(b.len(), n * n);
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, b[k * n + k].abs());
            for i in k + 1..n {
                let v = b[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= SINGULAR_TOL * scale {
                return Err(Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    b.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = b[k * n + k];
            let (head, tail) = b.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..];
            for row_i in tail.chunks_exact_mut(n) {
                let l = row_i[k] / pivot;
                row_i[k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        row_i[j] -= l * row_k[j];
                    }
                }
            }
        }
        Ok(LuFactor { n, lu: b, perm })
    }

    /// Solves `B x = r` in place.
    pub fn solve(&self, r: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.n;
        scratch.clear();
        scratch.extend(self.perm.iter().map(|&p| r[p]));
        let v = scratch;
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&v[..i]).map(|(a, b)| a * b).sum();
            v[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&v[i + 1..])
                .map(|(a, b)| a * b)
                .sum();
            v[i] = (v[i] - s) / row[i];
        }
        r.copy_from_slice(v);
    }

    /// Solves `B^T x = r` in place.
    pub fn solve_transpose(&self, r: &mut [f64]) {
        let n = self.n;
        // U^T z = r
        for i in 0..n {
            let zi = r[i] / self.lu[i * n + i];
            r[i] = zi;
            if zi != 0.0 {
                let row = &self.lu[i * n + i + 1..(i + 1) * n];
                for (rj, u) in r[i + 1..].iter_mut().zip(row) {
                    *rj -= u * zi;
                }
            }
        }
        // L^T w = z
        for i in (0..n).rev() {
            let wi = r[i];
            if wi != 0.0 {
                let row = &self.lu[i * n..i * n + i];
                for (rj, l) in r[..i].iter_mut().zip(row) {
                    *rj -= l * wi;
                }
            }
        }
        // x[perm[i]] = w[i]
        let w = r.to_vec();
        for (i, &p) in self.perm.iter().enumerate() {
            r[p] = w[i];
        }
    }
}
