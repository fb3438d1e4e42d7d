//! Dense linear algebra over a finite field. Subspaces are carried as matrices
//! whose rows form a basis.

use rand::Rng;

use crate::field::Field;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<E>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }
    pub fn ncols(&self) -> usize {
        self.cols
    }
    pub fn get(&self, i: usize, j: usize) -> E {
        self.data[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }
    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_vecs(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn push_row(&mut self, row: &[E]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Rows stacked: self on top of other.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Columns side by side.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Matrix { rows: self.rows, cols: self.cols + other.cols, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Matrix { rows: self.rows, cols: idx.len(), data }
    }
}

pub type FMat<F> = Matrix<<F as Field>::Elem>;

pub fn zeros<F: Field>(f: &F, rows: usize, cols: usize) -> FMat<F> {
    Matrix::filled(rows, cols, f.zero())
}

pub fn identity<F: Field>(f: &F, n: usize) -> FMat<F> {
    let mut m = zeros(f, n, n);
    for i in 0..n {
        m.set(i, i, f.one());
    }
    m
}

pub fn random_matrix<F: Field, R: Rng + ?Sized>(f: &F, rows: usize, cols: usize, rng: &mut R) -> FMat<F> {
    let data = (0..rows * cols).map(|_| f.random(rng)).collect();
    Matrix::from_flat(rows, cols, data)
}

pub fn mat_mul<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> FMat<F> {
    assert_eq!(a.cols, b.rows, "dimension mismatch in product");
    let mut out = zeros(f, a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if f.is_zero(aik) {
                continue;
            }
            let brow = b.row(k);
            let orow = out.row_mut(i);
            for j in 0..b.cols {
                orow[j] = f.add(orow[j], f.mul(aik, brow[j]));
            }
        }
    }
    out
}

pub fn mat_add<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> FMat<F> {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f.add(x, y)).collect();
    Matrix::from_flat(a.rows, a.cols, data)
}

pub fn mat_sub<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> FMat<F> {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f.sub(x, y)).collect();
    Matrix::from_flat(a.rows, a.cols, data)
}

pub fn mat_scale<F: Field>(f: &F, a: &FMat<F>, s: F::Elem) -> FMat<F> {
    let data = a.data.iter().map(|&x| f.mul(x, s)).collect();
    Matrix::from_flat(a.rows, a.cols, data)
}

/// Row vector times matrix: v A.
pub fn vec_mul<F: Field>(f: &F, v: &[F::Elem], a: &FMat<F>) -> Vec<F::Elem> {
    assert_eq!(v.len(), a.rows);
    let mut out = vec![f.zero(); a.cols];
    for (k, &vk) in v.iter().enumerate() {
        if f.is_zero(vk) {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o = f.add(*o, f.mul(vk, a.get(k, j)));
        }
    }
    out
}

/// Matrix times column vector: A v.
pub fn mul_vec<F: Field>(f: &F, a: &FMat<F>, v: &[F::Elem]) -> Vec<F::Elem> {
    assert_eq!(v.len(), a.cols);
    (0..a.rows).map(|i| a.row(i).iter().zip(v).fold(f.zero(), |acc, (&x, &y)| f.add(acc, f.mul(x, y)))).collect()
}

pub fn dot<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> F::Elem {
    a.iter().zip(b).fold(f.zero(), |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

pub fn vec_add<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

pub fn vec_sub<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
    a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect()
}

pub fn vec_scale<F: Field>(f: &F, a: &[F::Elem], s: F::Elem) -> Vec<F::Elem> {
    a.iter().map(|&x| f.mul(x, s)).collect()
}

pub fn is_zero_vec<F: Field>(f: &F, a: &[F::Elem]) -> bool {
    a.iter().all(|&x| f.is_zero(x))
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<F: Field>(f: &F, m: &mut FMat<F>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(piv) = (r..m.rows).find(|&i| !f.is_zero(m.get(i, c))) else {
            continue;
        };
        if piv != r {
            for j in 0..m.cols {
                m.data.swap(piv * m.cols + j, r * m.cols + j);
            }
        }
        let inv = f.inv(m.get(r, c));
        for j in c..m.cols {
            let v = f.mul(m.get(r, j), inv);
            m.set(r, j, v);
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m.get(i, c);
            if f.is_zero(factor) {
                continue;
            }
            for j in c..m.cols {
                let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: Field>(f: &F, m: &FMat<F>) -> usize {
    let mut c = m.clone();
    rref(f, &mut c).len()
}

/// Basis (as rows) of the row space, in reduced echelon form.
pub fn row_basis<F: Field>(f: &F, m: &FMat<F>) -> FMat<F> {
    let mut c = m.clone();
    let k = rref(f, &mut c).len();
    c.select_rows(&(0..k).collect::<Vec<_>>())
}

/// Basis (as rows) of {v : M v = 0}.
pub fn nullspace<F: Field>(f: &F, m: &FMat<F>) -> FMat<F> {
    let mut c = m.clone();
    let pivots = rref(f, &mut c);
    let free: Vec<usize> = (0..m.cols).filter(|j| !pivots.contains(j)).collect();
    let mut out = zeros(f, free.len(), m.cols);
    for (k, &fc) in free.iter().enumerate() {
        out.set(k, fc, f.one());
        for (i, &pc) in pivots.iter().enumerate() {
            out.set(k, pc, f.neg(c.get(i, fc)));
        }
    }
    out
}

/// Basis (as rows) of {v : v M = 0}.
pub fn left_nullspace<F: Field>(f: &F, m: &FMat<F>) -> FMat<F> {
    nullspace(f, &m.transpose())
}

/// Solve M x = b; None if inconsistent.
pub fn solve<F: Field>(f: &F, m: &FMat<F>, b: &[F::Elem]) -> Option<Vec<F::Elem>> {
    assert_eq!(b.len(), m.rows);
    let cols = m.cols;
    let mut aug = m.hstack(&Matrix::from_flat(b.len(), 1, b.to_vec()));
    let pivots = rref(f, &mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![f.zero(); cols];
    for (i, &pc) in pivots.iter().enumerate() {
        x[pc] = aug.get(i, cols);
    }
    Some(x)
}

/// Solve x M = b for a row vector x.
pub fn solve_left<F: Field>(f: &F, m: &FMat<F>, b: &[F::Elem]) -> Option<Vec<F::Elem>> {
    solve(f, &m.transpose(), b)
}

pub fn inverse<F: Field>(f: &F, m: &FMat<F>) -> Option<FMat<F>> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut aug = m.hstack(&identity(f, n));
    let pivots = rref(f, &mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.select_cols(&(n..2 * n).collect::<Vec<_>>()))
}

/// Whether v lies in the row space spanned by the rows of `basis`.
pub fn in_span<F: Field>(f: &F, basis: &FMat<F>, v: &[F::Elem]) -> bool {
    if basis.rows == 0 {
        return is_zero_vec(f, v);
    }
    solve_left(f, basis, v).is_some()
}

/// Coordinates of v in terms of the rows of basis (which must be independent).
pub fn coordinates<F: Field>(f: &F, basis: &FMat<F>, v: &[F::Elem]) -> Option<Vec<F::Elem>> {
    if basis.rows == 0 {
        return if is_zero_vec(f, v) { Some(vec![]) } else { None };
    }
    solve_left(f, basis, v)
}

/// Sum of two row spaces.
pub fn span_sum<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> FMat<F> {
    row_basis(f, &a.vstack(b))
}

/// Intersection of two row spaces.
pub fn intersect<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> FMat<F> {
    if a.rows == 0 || b.rows == 0 {
        return zeros(f, 0, a.cols.max(b.cols));
    }
    // x A = y B  <=>  (x, -y) [A; B] = 0
    let stacked = a.vstack(b);
    let kernel = left_nullspace(f, &stacked);
    let mut out = zeros(f, 0, a.cols);
    for k in 0..kernel.rows {
        let x = &kernel.row(k)[..a.rows];
        out.push_row(&vec_mul(f, x, a));
    }
    row_basis(f, &out)
}

/// Whether two row spaces coincide.
pub fn same_span<F: Field>(f: &F, a: &FMat<F>, b: &FMat<F>) -> bool {
    let ra = rank(f, a);
    ra == rank(f, b) && ra == rank(f, &a.vstack(b))
}

/// Rows completing the rows of `a` to a basis of F^n (standard vectors).
pub fn complement<F: Field>(f: &F, a: &FMat<F>) -> FMat<F> {
    let n = a.cols;
    let mut cur = row_basis(f, a);
    let mut out = zeros(f, 0, n);
    for j in 0..n {
        let mut e = vec![f.zero(); n];
        e[j] = f.one();
        if !in_span(f, &cur, &e) {
            cur.push_row(&e);
            out.push_row(&e);
        }
    }
    out
}

/// Annihilator {y : x G y^T = 0 for all rows x of a} of a row space under the
/// bilinear form with Gram matrix g.
pub fn annihilator<F: Field>(f: &F, a: &FMat<F>, gram: &FMat<F>) -> FMat<F> {
    if a.rows == 0 {
        return identity(f, gram.cols);
    }
    nullspace(f, &mat_mul(f, a, gram))
}

/// Determinant by elimination.
pub fn determinant<F: Field>(f: &F, m: &FMat<F>) -> F::Elem {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut det = f.one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| !f.is_zero(a.get(i, c))) else {
            return f.zero();
        };
        if piv != c {
            for j in 0..n {
                a.data.swap(piv * n + j, c * n + j);
            }
            det = f.neg(det);
        }
        let d = a.get(c, c);
        det = f.mul(det, d);
        let inv = f.inv(d);
        for i in c + 1..n {
            let factor = f.mul(a.get(i, c), inv);
            if f.is_zero(factor) {
                continue;
            }
            for j in c..n {
                let v = f.sub(a.get(i, j), f.mul(factor, a.get(c, j)));
                a.set(i, j, v);
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GaloisField, PrimeField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nullspace_is_kernel() {
        let f = PrimeField::new(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = random_matrix(&f, 3, 6, &mut rng);
            let k = nullspace(&f, &m);
            assert_eq!(k.nrows() + rank(&f, &m), 6);
            for i in 0..k.nrows() {
                assert!(is_zero_vec(&f, &mul_vec(&f, &m, k.row(i))));
            }
        }
    }

    #[test]
    fn inverse_round_trip_over_extension() {
        let f = GaloisField::new(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut found = 0;
        for _ in 0..20 {
            let m = random_matrix(&f, 4, 4, &mut rng);
            if let Some(inv) = inverse(&f, &m) {
                assert_eq!(mat_mul(&f, &m, &inv), identity(&f, 4));
                assert!(!f.is_zero(determinant(&f, &m)));
                found += 1;
            } else {
                assert!(f.is_zero(determinant(&f, &m)));
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn intersection_dimension() {
        let f = PrimeField::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let a = random_matrix(&f, 3, 5, &mut rng);
            let b = random_matrix(&f, 3, 5, &mut rng);
            let i = intersect(&f, &a, &b);
            let s = span_sum(&f, &a, &b);
            assert_eq!(rank(&f, &a) + rank(&f, &b), i.nrows() + s.nrows());
            for k in 0..i.nrows() {
                assert!(in_span(&f, &a, i.row(k)) && in_span(&f, &b, i.row(k)));
            }
        }
    }

    #[test]
    fn solve_and_complement() {
        let f = PrimeField::new(11);
        let m = Matrix::from_rows(&[vec![1, 2, 3], vec![0, 1, 4]], 3);
        let x = solve(&f, &m, &[5, 6]).unwrap();
        assert_eq!(mul_vec(&f, &m, &x), vec![5, 6]);
        let c = complement(&f, &m);
        assert_eq!(c.nrows(), 1);
        assert_eq!(rank(&f, &m.vstack(&c)), 3);
    }
}
