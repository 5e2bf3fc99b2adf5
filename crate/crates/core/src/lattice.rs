//! Discrete velocity sets and the non-orthogonal moment bases.
//!
//! Velocity ordering for D3Q19 (column `j` of rows 1-3 of the moment matrix):
//!
//! ```text
//!  i   c_i          i   c_i           i   c_i
//!  0  ( 0, 0, 0)    7  ( 1, 1, 0)    13  ( 1, 0,-1)
//!  1  ( 1, 0, 0)    8  (-1,-1, 0)    14  (-1, 0, 1)
//!  2  (-1, 0, 0)    9  ( 1,-1, 0)    15  ( 0, 1, 1)
//!  3  ( 0, 1, 0)   10  (-1, 1, 0)    16  ( 0,-1,-1)
//!  4  ( 0,-1, 0)   11  ( 1, 0, 1)    17  ( 0, 1,-1)
//!  5  ( 0, 0, 1)   12  (-1, 0,-1)    18  ( 0,-1, 1)
//!  6  ( 0, 0,-1)
//! ```
//!
//! D3Q7 uses the first seven entries of the same table.
//!
//! The inverse matrices are computed once by Gauss-Jordan elimination with
//! partial pivoting and frozen in the descriptor.

use crate::error::{Error, Result};

pub const Q19: usize = 19;
pub const Q7: usize = 7;

pub const D3Q19_VELOCITIES: [[i32; 3]; Q19] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
];

pub const D3Q19_WEIGHTS: [f64; Q19] = [
    1.0 / 3.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

/// `c[OPPOSITE[i]] == -c[i]`.
pub const D3Q19_OPPOSITE: [usize; Q19] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17];

pub const D3Q7_OPPOSITE: [usize; Q7] = [0, 2, 1, 4, 3, 6, 5];

/// Non-orthogonal D3Q19 moment matrix, row by row:
/// `1, cx, cy, cz, |c|^2, 2cx^2-cy^2-cz^2, cy^2-cz^2, cxcy, cxcz, cycz,
///  cx^2cy, cxcy^2, cx^2cz, cxcz^2, cy^2cz, cycz^2, cx^2cy^2, cx^2cz^2, cy^2cz^2`.
#[rustfmt::skip]
pub const D3Q19_MATRIX: [[i8; Q19]; Q19] = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [0, 1, -1, 0, 0, 0, 0, 1, -1, 1, -1, 1, -1, 1, -1, 0, 0, 0, 0],
    [0, 0, 0, 1, -1, 0, 0, 1, -1, -1, 1, 0, 0, 0, 0, 1, -1, 1, -1],
    [0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, -1, 1, 1, -1, -1, 1],
    [0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2],
    [0, 2, 2, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1, 1, 1, -2, -2, -2, -2],
    [0, 0, 0, 1, 1, -1, -1, 1, 1, 1, 1, -1, -1, -1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1, 1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, -1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, -1, -1],
    [0, 0, 0, 0, 0, 0, 0, 1, -1, -1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1, -1, 1, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1, -1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1, 1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1, -1, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1, 1, -1],
    [0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1],
];

/// Non-orthogonal D3Q7 moment matrix: `1, cx, cy, cz, |c|^2, cx^2-cy^2, cx^2-cz^2`.
#[rustfmt::skip]
pub const D3Q7_MATRIX: [[i8; Q7]; Q7] = [
    [1, 1, 1, 1, 1, 1, 1],
    [0, 1, -1, 0, 0, 0, 0],
    [0, 0, 0, 1, -1, 0, 0],
    [0, 0, 0, 0, 0, 1, -1],
    [0, 1, 1, 1, 1, 1, 1],
    [0, 1, 1, -1, -1, 0, 0],
    [0, 1, 1, 0, 0, -1, -1],
];

/// Default D3Q7 rest-weight parameter `w̄`.
pub const DEFAULT_REST_WEIGHT: f64 = 0.5;

/// `M̂ f` for the D3Q19 basis, written out over opposite-pair sums and differences.
#[inline(always)]
pub fn d3q19_moments(f: &[f64; Q19]) -> [f64; Q19] {
    let s = |i: usize| f[i] + f[i + 1];
    let d = |i: usize| f[i] - f[i + 1];
    let (sa, sb, sc, sp, sq, sr, st, sv, sw) = (s(1), s(3), s(5), s(7), s(9), s(11), s(13), s(15), s(17));
    let (da, db, dc, dp, dq, dr, dt, dv, dw) = (d(1), d(3), d(5), d(7), d(9), d(11), d(13), d(15), d(17));
    let (m16, m17, m18) = (sp + sq, sr + st, sv + sw);
    let axis = sa + sb + sc;
    let diag = m16 + m17 + m18;
    [
        f[0] + axis + diag,
        da + dp + dq + dr + dt,
        db + dp - dq + dv + dw,
        dc + dr - dt + dv - dw,
        axis + 2.0 * diag,
        2.0 * sa - sb - sc + m16 + m17 - 2.0 * m18,
        sb - sc + m16 - m17,
        sp - sq,
        sr - st,
        sv - sw,
        dp - dq,
        dp + dq,
        dr - dt,
        dr + dt,
        dv - dw,
        dv + dw,
        m16,
        m17,
        m18,
    ]
}

/// `M̂⁻¹ m` for the D3Q19 basis.
#[inline(always)]
pub fn d3q19_populations(m: &[f64; Q19]) -> [f64; Q19] {
    let (sp, sq) = (0.5 * (m[16] + m[7]), 0.5 * (m[16] - m[7]));
    let (sr, st) = (0.5 * (m[17] + m[8]), 0.5 * (m[17] - m[8]));
    let (sv, sw) = (0.5 * (m[18] + m[9]), 0.5 * (m[18] - m[9]));
    let (dp, dq) = (0.5 * (m[11] + m[10]), 0.5 * (m[11] - m[10]));
    let (dr, dt) = (0.5 * (m[13] + m[12]), 0.5 * (m[13] - m[12]));
    let (dv, dw) = (0.5 * (m[15] + m[14]), 0.5 * (m[15] - m[14]));
    let diag = m[16] + m[17] + m[18];
    let axis = m[4] - 2.0 * diag;
    let x = m[5] - m[16] - m[17] + 2.0 * m[18];
    let y = m[6] - m[16] + m[17];
    let sa = (axis + x) / 3.0;
    let sb = 0.5 * (axis - sa + y);
    let sc = 0.5 * (axis - sa - y);
    let da = m[1] - m[11] - m[13];
    let db = m[2] - m[10] - m[15];
    let dc = m[3] - m[12] - m[14];
    let half = |s: f64, d: f64| (0.5 * (s + d), 0.5 * (s - d));
    let (f1, f2) = half(sa, da);
    let (f3, f4) = half(sb, db);
    let (f5, f6) = half(sc, dc);
    let (f7, f8) = half(sp, dp);
    let (f9, f10) = half(sq, dq);
    let (f11, f12) = half(sr, dr);
    let (f13, f14) = half(st, dt);
    let (f15, f16) = half(sv, dv);
    let (f17, f18) = half(sw, dw);
    [
        m[0] - axis - diag,
        f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14, f15, f16, f17, f18,
    ]
}

/// `M̂ g` for the D3Q7 basis.
#[inline(always)]
pub fn d3q7_moments(g: &[f64; Q7]) -> [f64; Q7] {
    let (sa, sb, sc) = (g[1] + g[2], g[3] + g[4], g[5] + g[6]);
    let axis = sa + sb + sc;
    [g[0] + axis, g[1] - g[2], g[3] - g[4], g[5] - g[6], axis, sa - sb, sa - sc]
}

/// `M̂⁻¹ m` for the D3Q7 basis.
#[inline(always)]
pub fn d3q7_populations(m: &[f64; Q7]) -> [f64; Q7] {
    let sa = (m[4] + m[5] + m[6]) / 3.0;
    let (sb, sc) = (sa - m[5], sa - m[6]);
    [
        m[0] - m[4],
        0.5 * (sa + m[1]),
        0.5 * (sa - m[1]),
        0.5 * (sb + m[2]),
        0.5 * (sb - m[2]),
        0.5 * (sc + m[3]),
        0.5 * (sc - m[3]),
    ]
}

/// Row-compressed sparse matrix used by the collision kernels.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_dense(dense: &[f64], n: usize, drop_below: f64) -> Self {
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for r in 0..n {
            for c in 0..n {
                let v = dense[r * n + c];
                if v.abs() > drop_below {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self { row_start, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`.
    #[inline(always)]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

/// A discrete velocity set with its weights and moment basis.
#[derive(Debug, Clone)]
pub struct LatticeDescriptor {
    q: usize,
    velocities: Vec<[i32; 3]>,
    weights: Vec<f64>,
    opposite: Vec<usize>,
    matrix: Vec<f64>,
    inverse: Vec<f64>,
    cs2: f64,
    sparse_matrix: SparseMatrix,
    sparse_inverse: SparseMatrix,
}

impl LatticeDescriptor {
    fn build(
        velocities: Vec<[i32; 3]>,
        weights: Vec<f64>,
        opposite: Vec<usize>,
        matrix: Vec<f64>,
        cs2: f64,
    ) -> Result<Self> {
        let q = velocities.len();
        let inverse = invert(&matrix, q)?;
        let sparse_matrix = SparseMatrix::from_dense(&matrix, q, 0.0);
        let sparse_inverse = SparseMatrix::from_dense(&inverse, q, 1e-15);
        Ok(Self {
            q,
            velocities,
            weights,
            opposite,
            matrix,
            inverse,
            cs2,
            sparse_matrix,
            sparse_inverse,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn velocities(&self) -> &[[i32; 3]] {
        &self.velocities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the reversed velocity for each direction.
    pub fn opposite(&self) -> &[usize] {
        &self.opposite
    }

    /// Row-major `q x q` moment matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Row-major `q x q` inverse of the moment matrix.
    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    pub fn cs2(&self) -> f64 {
        self.cs2
    }

    pub fn sparse_matrix(&self) -> &SparseMatrix {
        &self.sparse_matrix
    }

    pub fn sparse_inverse(&self) -> &SparseMatrix {
        &self.sparse_inverse
    }

    /// `M · populations`.
    pub fn to_moments(&self, populations: &[f64]) -> Vec<f64> {
        assert_eq!(populations.len(), self.q, "population count mismatch");
        dense_apply(&self.matrix, self.q, populations)
    }

    /// `M⁻¹ · moments`.
    pub fn from_moments(&self, moments: &[f64]) -> Vec<f64> {
        assert_eq!(moments.len(), self.q, "moment count mismatch");
        dense_apply(&self.inverse, self.q, moments)
    }

    /// `E_axis = M diag(c_{i,axis}) M⁻¹`, the streaming operator along one axis in moment space.
    pub fn velocity_operator(&self, axis: usize) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; q * q];
        for r in 0..q {
            for c in 0..q {
                let mut acc = 0.0;
                for k in 0..q {
                    acc += self.matrix[r * q + k] * self.velocities[k][axis] as f64 * self.inverse[k * q + c];
                }
                out[r * q + c] = acc;
            }
        }
        out
    }
}

/// The D3Q19 flow lattice.
pub fn d3q19_descriptor() -> Result<LatticeDescriptor> {
    let matrix = D3Q19_MATRIX.iter().flat_map(|row| row.iter().map(|&v| v as f64)).collect();
    LatticeDescriptor::build(
        D3Q19_VELOCITIES.to_vec(),
        D3Q19_WEIGHTS.to_vec(),
        D3Q19_OPPOSITE.to_vec(),
        matrix,
        1.0 / 3.0,
    )
}

/// The D3Q7 thermal lattice with rest weight `1 - w̄` and axis weights `w̄/6`.
pub fn d3q7_descriptor(rest_weight: f64) -> Result<LatticeDescriptor> {
    if !(rest_weight > 0.0 && rest_weight < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "D3Q7 weight parameter must lie in (0, 1), got {rest_weight}"
        )));
    }
    let mut weights = vec![rest_weight / 6.0; Q7];
    weights[0] = 1.0 - rest_weight;
    let matrix = D3Q7_MATRIX.iter().flat_map(|row| row.iter().map(|&v| v as f64)).collect();
    LatticeDescriptor::build(
        D3Q19_VELOCITIES[..Q7].to_vec(),
        weights,
        D3Q7_OPPOSITE.to_vec(),
        matrix,
        rest_weight / 3.0,
    )
}

fn dense_apply(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|r| m[r * n..(r + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Gauss-Jordan inversion with partial pivoting of a row-major `n x n` matrix.
pub fn invert(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))
            .unwrap();
        let pivot = a[pivot_row * n + col];
        if pivot.abs() < 1e-12 {
            return Err(Error::SingularMatrix { column: col, pivot });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
                inv.swap(col * n + k, pivot_row * n + k);
            }
        }
        let scale = 1.0 / pivot;
        for k in 0..n {
            a[col * n + k] *= scale;
            inv[col * n + k] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                a[r * n + k] -= factor * a[col * n + k];
                inv[r * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    // Snap round-off so the frozen inverse is exact for the rational entries of these bases.
    for v in inv.iter_mut() {
        let snapped = (*v * 72.0).round() / 72.0;
        if (*v - snapped).abs() < 1e-13 {
            *v = snapped;
        }
    }
    Ok(inv)
}
