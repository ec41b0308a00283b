//! Dense row-major matrices, including a lock-free shared variant for
//! asynchronous SGD.
//!
//! [`SharedMatrix`] stores cells as atomics and is written by concurrent
//! workers without mutual exclusion; lost updates under contention are
//! tolerated by the training contract. All arithmetic happens in `f64`; the
//! cell type only sets storage precision, so the single-precision production
//! path and the double-precision gradient-check path share one code path.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::Rng;

/// Storage scalar for shared parameter matrices.
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + 'static {
    type Atomic: Send + Sync + std::fmt::Debug;

    fn pack(self) -> Self::Atomic;
    fn load(cell: &Self::Atomic) -> Self;
    fn store(cell: &Self::Atomic, value: Self);
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    type Atomic = AtomicU32;

    fn pack(self) -> AtomicU32 {
        AtomicU32::new(self.to_bits())
    }

    fn load(cell: &AtomicU32) -> f32 {
        f32::from_bits(cell.load(Ordering::Relaxed))
    }

    fn store(cell: &AtomicU32, value: f32) {
        cell.store(value.to_bits(), Ordering::Relaxed);
    }

    fn from_f64(x: f64) -> f32 {
        x as f32
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    type Atomic = AtomicU64;

    fn pack(self) -> AtomicU64 {
        AtomicU64::new(self.to_bits())
    }

    fn load(cell: &AtomicU64) -> f64 {
        f64::from_bits(cell.load(Ordering::Relaxed))
    }

    fn store(cell: &AtomicU64, value: f64) {
        cell.store(value.to_bits(), Ordering::Relaxed);
    }

    fn from_f64(x: f64) -> f64 {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Row-major matrix whose cells may be read and written concurrently.
#[derive(Debug)]
pub struct SharedMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    cells: Vec<T::Atomic>,
}

impl<T: Scalar> SharedMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let cells = (0..rows * cols).map(|_| T::from_f64(0.0).pack()).collect();
        Self { rows, cols, cells }
    }

    /// Builds from single-precision row-major data, widening as needed.
    pub fn from_dense(dense: &Matrix) -> Self {
        let cells = dense
            .data()
            .iter()
            .map(|&x| T::from_f64(f64::from(x)).pack())
            .collect();
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            cells,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.rows && c < self.cols);
        r * self.cols + c
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        T::load(&self.cells[self.idx(r, c)])
    }

    #[inline]
    pub fn set(&self, r: usize, c: usize, value: T) {
        T::store(&self.cells[self.idx(r, c)], value);
    }

    /// Fills every cell with draws from `Uniform(-bound, bound)` in row-major
    /// order, so a seeded rng reproduces the exact same initialization.
    pub fn fill_uniform<R: Rng + ?Sized>(&self, bound: f64, rng: &mut R) {
        for cell in &self.cells {
            T::store(cell, T::from_f64(rng.gen_range(-bound..bound)));
        }
    }

    /// Copies row `r` into `out` as f64. `out.len()` must equal `cols`.
    #[inline]
    pub fn load_row(&self, r: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.cols);
        let base = r * self.cols;
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = T::load(&self.cells[base + c]).to_f64();
        }
    }

    /// `row[c] += scale * v[c]` for every column. Lossy under concurrent
    /// writers; tolerated by the asynchronous SGD contract.
    #[inline]
    pub fn add_row_scaled(&self, r: usize, v: &[f64], scale: f64) {
        assert_eq!(v.len(), self.cols);
        let base = r * self.cols;
        for (c, &vc) in v.iter().enumerate() {
            let cell = &self.cells[base + c];
            let cur = T::load(cell).to_f64();
            T::store(cell, T::from_f64(cur + scale * vc));
        }
    }

    pub fn all_finite(&self) -> bool {
        self.cells.iter().all(|c| T::load(c).to_f64().is_finite())
    }

    /// Single-precision snapshot of the current contents.
    pub fn snapshot(&self) -> Matrix {
        let data = self
            .cells
            .iter()
            .map(|c| T::load(c).to_f64() as f32)
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }
}

/// Plain immutable row-major matrix used for trained model storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shared_roundtrips_values() {
        let m = SharedMatrix::<f32>::zeros(2, 3);
        m.set(1, 2, 0.25);
        assert_eq!(m.get(1, 2), 0.25);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn add_row_scaled_accumulates() {
        let m = SharedMatrix::<f64>::zeros(1, 3);
        m.add_row_scaled(0, &[1.0, 2.0, 3.0], 0.5);
        m.add_row_scaled(0, &[1.0, 0.0, 0.0], 1.0);
        let mut row = [0.0; 3];
        m.load_row(0, &mut row);
        assert_eq!(row, [1.5, 1.0, 1.5]);
    }

    #[test]
    fn fill_uniform_is_seed_deterministic_and_bounded() {
        let a = SharedMatrix::<f32>::zeros(4, 5);
        let b = SharedMatrix::<f32>::zeros(4, 5);
        a.fill_uniform(0.1, &mut ChaCha8Rng::seed_from_u64(9));
        b.fill_uniform(0.1, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.snapshot(), b.snapshot());
        assert!(a.snapshot().data().iter().all(|x| x.abs() < 0.1));
    }

    #[test]
    fn snapshot_matches_cells() {
        let m = SharedMatrix::<f64>::zeros(2, 2);
        m.set(0, 1, -1.5);
        let snap = m.snapshot();
        assert_eq!(snap.row(0), &[0.0, -1.5]);
        assert!(m.all_finite());
        m.set(1, 1, f64::NAN);
        assert!(!m.all_finite());
    }
}
