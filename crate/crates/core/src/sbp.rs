//! Diagonal-norm summation-by-parts first-derivative operators.
//!
//! An operator on `n` nodes with spacing `h` consists of a positive quadrature
//! `P = h·diag(p)`, a dimensionless `Q` with `Q + Qᵀ = B = diag(-1, 0, …, 0, 1)`
//! and the derivative `D = P⁻¹Q`. Periodic operators use a circulant `Q` with
//! `Q + Qᵀ = 0` and `P = h·I`.

use crate::error::{Error, Result};

/// Accuracy pair (interior, boundary).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    /// (2,1)
    Second,
    /// (4,2)
    Fourth,
}

impl Order {
    pub fn from_pair(interior: usize, boundary: usize) -> Result<Self> {
        match (interior, boundary) {
            (2, 1) => Ok(Order::Second),
            (4, 2) => Ok(Order::Fourth),
            (p, q) => Err(Error::UnsupportedOrder(p, q)),
        }
    }

    pub fn pair(self) -> (usize, usize) {
        match self {
            Order::Second => (2, 1),
            Order::Fourth => (4, 2),
        }
    }

    pub fn interior(self) -> usize {
        self.pair().0
    }

    pub fn boundary(self) -> usize {
        self.pair().1
    }

    /// Smallest admissible node count.
    pub fn min_nodes(self) -> usize {
        match self {
            Order::Second => 4,
            Order::Fourth => 8,
        }
    }

    fn interior_q(self) -> &'static [f64] {
        match self {
            Order::Second => &[-0.5, 0.0, 0.5],
            Order::Fourth => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        }
    }

    fn boundary_weights(self) -> &'static [f64] {
        match self {
            Order::Second => &[0.5],
            Order::Fourth => &[17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0],
        }
    }

    /// Upper-left block of `Q`, rows are the closure rows.
    fn boundary_q(self) -> &'static [&'static [f64]] {
        match self {
            Order::Second => &[&[-0.5, 0.5]],
            Order::Fourth => &[
                &[-0.5, 59.0 / 96.0, -1.0 / 12.0, -1.0 / 32.0, 0.0, 0.0],
                &[-59.0 / 96.0, 0.0, 59.0 / 96.0, 0.0, 0.0, 0.0],
                &[1.0 / 12.0, -59.0 / 96.0, 0.0, 59.0 / 96.0, -1.0 / 12.0, 0.0],
                &[1.0 / 32.0, 0.0, -59.0 / 96.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            ],
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (p, q) = self.pair();
        write!(f, "({p},{q})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    Bounded,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    Dense,
    Banded,
}

/// Operators with at most this many nodes are applied densely.
pub const DENSE_LIMIT: usize = 64;

type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct SbpOperator1D {
    n: usize,
    h: f64,
    order: Order,
    closure: Closure,
    weights: Vec<f64>,
    q_rows: Vec<SparseRow>,
    d_rows: Vec<SparseRow>,
    dense_d: Option<Vec<f64>>,
}

/// Builds a bounded operator with storage chosen by size.
pub fn build_sbp_operator(order: Order, n: usize, h: f64) -> Result<SbpOperator1D> {
    SbpOperator1D::new(order, Closure::Bounded, n, h)
}

impl SbpOperator1D {
    pub fn new(order: Order, closure: Closure, n: usize, h: f64) -> Result<Self> {
        let storage = if n <= DENSE_LIMIT {
            Storage::Dense
        } else {
            Storage::Banded
        };
        Self::with_storage(order, closure, n, h, storage)
    }

    pub fn with_storage(
        order: Order,
        closure: Closure,
        n: usize,
        h: f64,
        storage: Storage,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSpacing(h));
        }
        let min = order.min_nodes();
        if n < min {
            return Err(Error::TooFewNodes { n, min });
        }
        let (q_rows, unit_weights) = match closure {
            Closure::Bounded => bounded_q(order, n),
            Closure::Periodic => (periodic_q(order, n), vec![1.0; n]),
        };
        let weights: Vec<f64> = unit_weights.iter().map(|w| w * h).collect();
        let d_rows: Vec<SparseRow> = q_rows
            .iter()
            .zip(&weights)
            .map(|(row, &w)| row.iter().map(|&(j, q)| (j, q / w)).collect())
            .collect();
        let dense_d = match storage {
            Storage::Dense => {
                let mut d = vec![0.0; n * n];
                for (i, row) in d_rows.iter().enumerate() {
                    for &(j, v) in row {
                        d[i * n + j] = v;
                    }
                }
                Some(d)
            }
            Storage::Banded => None,
        };
        Ok(SbpOperator1D {
            n,
            h,
            order,
            closure,
            weights,
            q_rows,
            d_rows,
            dense_d,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn storage(&self) -> Storage {
        if self.dense_d.is_some() {
            Storage::Dense
        } else {
            Storage::Banded
        }
    }

    /// Diagonal of `P` (includes `h`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q_dense(&self) -> Vec<f64> {
        to_dense(&self.q_rows, self.n)
    }

    pub fn d_dense(&self) -> Vec<f64> {
        to_dense(&self.d_rows, self.n)
    }

    /// Diagonal of `B`.
    pub fn b_diag(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        if self.closure == Closure::Bounded {
            b[0] = -1.0;
            b[self.n - 1] = 1.0;
        }
        b
    }

    /// Applies `D` to a strided line: `out[i*stride] = Σ_j D_ij u[j*stride]`.
    ///
    /// Both storages sum the nonzero entries of a row in ascending column
    /// order, so they agree bit for bit.
    #[inline]
    pub fn apply_strided(&self, u: &[f64], out: &mut [f64], stride: usize) {
        match &self.dense_d {
            Some(d) => {
                for i in 0..self.n {
                    let row = &d[i * self.n..(i + 1) * self.n];
                    let mut s = 0.0;
                    for (j, &dij) in row.iter().enumerate() {
                        if dij != 0.0 {
                            s += dij * u[j * stride];
                        }
                    }
                    out[i * stride] = s;
                }
            }
            None => {
                for (i, row) in self.d_rows.iter().enumerate() {
                    let mut s = 0.0;
                    for &(j, dij) in row {
                        s += dij * u[j * stride];
                    }
                    out[i * stride] = s;
                }
            }
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_strided(u, &mut out, 1);
        out
    }
}

fn to_dense(rows: &[SparseRow], n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            m[i * n + j] = v;
        }
    }
    m
}

fn bounded_q(order: Order, n: usize) -> (Vec<SparseRow>, Vec<f64>) {
    let block = order.boundary_q();
    let bw = order.boundary_weights();
    let nb = block.len();
    let stencil = order.interior_q();
    let r = stencil.len() / 2;

    let mut rows: Vec<SparseRow> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = SparseRow::new();
        if i < nb {
            for (j, &q) in block[i].iter().enumerate() {
                if q != 0.0 {
                    row.push((j, q));
                }
            }
        } else if i >= n - nb {
            let ii = n - 1 - i;
            let width = block[ii].len();
            for jj in (0..width).rev() {
                let q = block[ii][jj];
                if q != 0.0 {
                    row.push((n - 1 - jj, -q));
                }
            }
        } else {
            for (k, &q) in stencil.iter().enumerate() {
                if q != 0.0 {
                    row.push((i + k - r, q));
                }
            }
        }
        rows.push(row);
    }

    let mut w = vec![1.0; n];
    for (i, &b) in bw.iter().enumerate() {
        w[i] = b;
        w[n - 1 - i] = b;
    }
    (rows, w)
}

fn periodic_q(order: Order, n: usize) -> Vec<SparseRow> {
    let stencil = order.interior_q();
    let r = stencil.len() / 2;
    (0..n)
        .map(|i| {
            let mut row: SparseRow = stencil
                .iter()
                .enumerate()
                .filter(|(_, &q)| q != 0.0)
                .map(|(k, &q)| ((i + n + k - r) % n, q))
                .collect();
            row.sort_by_key(|&(j, _)| j);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_n5_matches_closed_form() {
        let op = build_sbp_operator(Order::Second, 5, 1.0).unwrap();
        assert_eq!(op.weights(), &[0.5, 1.0, 1.0, 1.0, 0.5]);
        let q = op.q_dense();
        assert_eq!(&q[0..5], &[-0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn q_plus_qt_is_b_bitwise() {
        for order in [Order::Second, Order::Fourth] {
            for closure in [Closure::Bounded, Closure::Periodic] {
                for n in [8, 9, 13, 70] {
                    let op = SbpOperator1D::new(order, closure, n, 0.37).unwrap();
                    let q = op.q_dense();
                    let b = op.b_diag();
                    for i in 0..n {
                        for j in 0..n {
                            let s = q[i * n + j] + q[j * n + i];
                            let expect = if i == j { b[i] } else { 0.0 };
                            assert_eq!(s, expect, "{order} {closure:?} n={n} ({i},{j})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_sbp_operator(Order::Fourth, 7, 1.0),
            Err(Error::TooFewNodes { n: 7, min: 8 })
        ));
        assert!(matches!(
            build_sbp_operator(Order::Second, 3, 1.0),
            Err(Error::TooFewNodes { .. })
        ));
        assert!(matches!(
            build_sbp_operator(Order::Second, 10, 0.0),
            Err(Error::InvalidSpacing(_))
        ));
        assert!(matches!(Order::from_pair(6, 3), Err(Error::UnsupportedOrder(6, 3))));
    }

    #[test]
    fn dense_and_banded_agree_bitwise() {
        for order in [Order::Second, Order::Fourth] {
            for closure in [Closure::Bounded, Closure::Periodic] {
                let n = 40;
                let a = SbpOperator1D::with_storage(order, closure, n, 0.1, Storage::Dense).unwrap();
                let b =
                    SbpOperator1D::with_storage(order, closure, n, 0.1, Storage::Banded).unwrap();
                let u: Vec<f64> = (0..n).map(|i| ((i * 7919) % 113) as f64 / 17.0 - 3.0).collect();
                assert_eq!(a.apply(&u), b.apply(&u));
            }
        }
        let big = build_sbp_operator(Order::Fourth, 100, 0.01).unwrap();
        assert_eq!(big.storage(), Storage::Banded);
        let small = build_sbp_operator(Order::Fourth, 64, 0.01).unwrap();
        assert_eq!(small.storage(), Storage::Dense);
    }

    #[test]
    fn weights_sum_to_length() {
        for order in [Order::Second, Order::Fourth] {
            let n = 21;
            let h = 1.0 / (n - 1) as f64;
            let op = build_sbp_operator(order, n, h).unwrap();
            let s: f64 = op.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(op.weights().iter().all(|&w| w > 0.0));
        }
    }
}
