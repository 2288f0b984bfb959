//! Exact rank and reduced row echelon form of integer matrices.
//!
//! Elimination is fraction-free (Bareiss/Montante Gauss–Jordan): every
//! division is exact, so entries stay integers. It runs on `i128` with
//! checked arithmetic and restarts on `BigInt` if anything overflows.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `MᵀM`, which has the same row space (and rank) as `M` over ℚ.
    pub fn gram(&self) -> IntMatrix {
        let mut g = IntMatrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let nz: Vec<(usize, i64)> = self
                .row(r)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(c, &v)| (c, v))
                .collect();
            for &(i, a) in &nz {
                for &(j, b) in &nz {
                    g.add(i, j, a * b);
                }
            }
        }
        g
    }

    /// Columns `cols` as a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                out.set(r, k, self.get(r, c));
            }
        }
        out
    }
}

/// Integer matrix stored as sparse rows; used for tall coefficient matrices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseIntMatrix {
    cols: usize,
    rows: Vec<Vec<(usize, i64)>>,
}

impl SparseIntMatrix {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            rows: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs; zeros are dropped and
    /// repeated columns summed.
    pub fn push_row(&mut self, mut entries: Vec<(usize, i64)>) {
        entries.sort_unstable_by_key(|e| e.0);
        let mut row: Vec<(usize, i64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            assert!(c < self.cols, "column {c} out of range");
            match row.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => row.push((c, v)),
            }
        }
        row.retain(|e| e.1 != 0);
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[(usize, i64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.rows[r]
            .binary_search_by_key(&c, |e| e.0)
            .map_or(0, |k| self.rows[r][k].1)
    }

    pub fn to_dense(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.rows.len(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m.set(r, c, v);
            }
        }
        m
    }

    pub fn gram(&self) -> IntMatrix {
        let mut g = IntMatrix::zeros(self.cols, self.cols);
        for row in &self.rows {
            for &(i, a) in row {
                for &(j, b) in row {
                    g.add(i, j, a * b);
                }
            }
        }
        g
    }

    /// Keeps only columns `cols`, renumbered `0..cols.len()`.
    pub fn select_columns(&self, cols: &[usize]) -> SparseIntMatrix {
        let mut position = vec![None; self.cols];
        for (k, &c) in cols.iter().enumerate() {
            position[c] = Some(k);
        }
        SparseIntMatrix {
            cols: cols.len(),
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .filter_map(|&(c, v)| position[c].map(|k| (k, v)))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn row_space_rref(&self) -> Rref {
        if self.rows.len() > 2 * self.cols {
            rref(&self.gram())
        } else {
            rref(&self.to_dense())
        }
    }
}

/// Exact rational with a positive denominator, always reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    pub fn new(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_zero() {
            (num, den)
        } else {
            (num / &g, den / &g)
        };
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        Self { num, den }
    }

    pub fn integer(v: i64) -> Self {
        Self {
            num: BigInt::from(v),
            den: BigInt::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn to_f64(&self) -> f64 {
        match (self.num.to_f64(), self.den.to_f64()) {
            (Some(n), Some(d)) => n / d,
            _ => f64::NAN,
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Reduced row echelon form restricted to its nonzero rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    /// Pivot column of each nonzero row, ascending.
    pub pivots: Vec<usize>,
    /// `rank × cols`, unit pivots, zeros above and below each pivot.
    pub rows: Vec<Vec<Rational>>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

trait ExactInt: Clone + PartialEq + Sized {
    fn unit() -> Self;
    fn lift(v: i64) -> Self;
    fn vanishes(&self) -> bool;
    /// `(a*b - c*d) / q`, exact; `None` on overflow.
    fn cross_div(a: &Self, b: &Self, c: &Self, d: &Self, q: &Self) -> Option<Self>;
    fn into_big(self) -> BigInt;
}

impl ExactInt for i128 {
    fn unit() -> Self {
        1
    }
    fn lift(v: i64) -> Self {
        v as i128
    }
    fn vanishes(&self) -> bool {
        *self == 0
    }
    fn cross_div(a: &Self, b: &Self, c: &Self, d: &Self, q: &Self) -> Option<Self> {
        let ab = a.checked_mul(*b)?;
        let cd = c.checked_mul(*d)?;
        let diff = ab.checked_sub(cd)?;
        debug_assert_eq!(diff % q, 0, "Bareiss division must be exact");
        Some(diff / q)
    }
    fn into_big(self) -> BigInt {
        BigInt::from(self)
    }
}

impl ExactInt for BigInt {
    fn unit() -> Self {
        One::one()
    }
    fn lift(v: i64) -> Self {
        BigInt::from(v)
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn cross_div(a: &Self, b: &Self, c: &Self, d: &Self, q: &Self) -> Option<Self> {
        let diff = a * b - c * d;
        debug_assert!(
            Zero::is_zero(&(&diff % q)),
            "Bareiss division must be exact"
        );
        Some(diff / q)
    }
    fn into_big(self) -> BigInt {
        self
    }
}

/// Fraction-free Gauss–Jordan. Returns the eliminated matrix, the pivot
/// columns and the final pivot value (every pivot row ends up scaled by
/// it), or `None` on overflow.
fn montante<T: ExactInt>(m: &IntMatrix) -> Option<(Vec<Vec<T>>, Vec<usize>, T)> {
    let mut a: Vec<Vec<T>> = (0..m.rows())
        .map(|r| m.row(r).iter().map(|&v| T::lift(v)).collect())
        .collect();
    let cols = m.cols();
    let mut prev = T::unit();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| !a[r][c].vanishes()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot_row = a[rank].clone();
        let piv = pivot_row[c].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == rank || row.iter().all(T::vanishes) {
                continue;
            }
            let f = row[c].clone();
            for j in 0..cols {
                row[j] = T::cross_div(&piv, &row[j], &f, &pivot_row[j], &prev)?;
            }
        }
        prev = piv;
        pivots.push(c);
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    a.truncate(rank);
    Some((a, pivots, prev))
}

fn to_rref<T: ExactInt>(rows: Vec<Vec<T>>, pivots: Vec<usize>, scale: T) -> Rref {
    let scale = scale.into_big();
    let rows = rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| Rational::new(v.into_big(), scale.clone()))
                .collect()
        })
        .collect();
    Rref { pivots, rows }
}

/// RREF of `m` by direct elimination.
pub fn rref(m: &IntMatrix) -> Rref {
    match montante::<i128>(m) {
        Some((rows, pivots, scale)) => to_rref(rows, pivots, scale),
        None => {
            let (rows, pivots, scale) = montante::<BigInt>(m).expect("BigInt never overflows");
            to_rref(rows, pivots, scale)
        }
    }
}

/// RREF of the row space of `m`. Tall matrices are reduced through their
/// Gram matrix `MᵀM`, which spans the same row space.
pub fn row_space_rref(m: &IntMatrix) -> Rref {
    if m.rows() > 2 * m.cols() {
        rref(&m.gram())
    } else {
        rref(m)
    }
}

pub fn rank(m: &IntMatrix) -> usize {
    row_space_rref(m).rank()
}
