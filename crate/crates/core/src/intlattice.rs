//! Integer lattices: Smith and Hermite normal forms for small dense matrices.

/// Invariant factors of an integer matrix (Smith normal form diagonal), with
/// the nonzero entries first, each dividing the next, followed by zeros for
/// the rank deficiency up to min(rows, cols).
pub fn smith_diagonal(rows: &[Vec<i64>]) -> Vec<i64> {
    if rows.is_empty() {
        return vec![];
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| {
            assert_eq!(r.len(), ncols, "ragged integer matrix");
            r.iter().map(|&x| x as i128).collect()
        })
        .collect();
    let nrows = a.len();
    let mut diag = Vec::new();
    for t in 0..nrows.min(ncols) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..nrows {
                for j in t..ncols {
                    if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let piv = a[t][t];
            let mut clean = true;
            for i in t + 1..nrows {
                let q = a[i][t].div_euclid(piv);
                for j in t..ncols {
                    a[i][j] -= q * a[t][j];
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..ncols {
                let q = a[t][j].div_euclid(piv);
                for row in a.iter_mut().skip(t) {
                    row[j] -= q * row[t];
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // the pivot must divide the rest of the block
            let bad = (t + 1..nrows).find(|&i| (t + 1..ncols).any(|j| a[i][j] % piv != 0));
            match bad {
                None => break,
                Some(i) => {
                    for j in t..ncols {
                        a[t][j] += a[i][j];
                    }
                }
            }
        }
        if a[t][t] == 0 {
            break;
        }
        diag.push(a[t][t].abs() as i64);
    }
    while diag.len() < nrows.min(ncols) {
        diag.push(0);
    }
    diag
}

/// Torsion invariant factors (> 1) and free rank of Z^n / (row span).
pub fn quotient_structure(gens: &[Vec<i64>], n: usize) -> (Vec<i64>, usize) {
    if gens.is_empty() {
        return (vec![], n);
    }
    let d = smith_diagonal(gens);
    let rank = d.iter().filter(|&&x| x != 0).count();
    let torsion = d.into_iter().filter(|&x| x > 1).collect();
    (torsion, n - rank)
}

/// Exponent (largest invariant factor) of the torsion of Z^n / (row span).
pub fn torsion_exponent(gens: &[Vec<i64>], n: usize) -> i64 {
    quotient_structure(gens, n).0.last().copied().unwrap_or(1)
}

/// Row-style Hermite normal form of the row lattice, zero rows removed.
/// Canonical for the lattice, so it serves as a dedupe key.
pub fn hermite_rows(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    if rows.is_empty() {
        return vec![];
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut r = 0;
    for c in 0..ncols {
        if r == a.len() {
            break;
        }
        // Euclid on column c among rows r..
        loop {
            let mut best: Option<usize> = None;
            for i in r..a.len() {
                if a[i][c] != 0 && best.is_none_or(|b| a[i][c].abs() < a[b][c].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            a.swap(r, b);
            let mut done = true;
            for i in r + 1..a.len() {
                let q = a[i][c].div_euclid(a[r][c]);
                if q != 0 {
                    for j in 0..ncols {
                        a[i][j] -= q * a[r][j];
                    }
                }
                if a[i][c] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if r < a.len() && a[r][c] != 0 {
            if a[r][c] < 0 {
                for j in 0..ncols {
                    a[r][j] = -a[r][j];
                }
            }
            for i in 0..r {
                let q = a[i][c].div_euclid(a[r][c]);
                if q != 0 {
                    for j in 0..ncols {
                        a[i][j] -= q * a[r][j];
                    }
                }
            }
            r += 1;
        }
    }
    a.truncate(r);
    a.into_iter().map(|row| row.into_iter().map(|x| x as i64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_examples() {
        assert_eq!(smith_diagonal(&[vec![1, 0], vec![0, 1]]), vec![1, 1]);
        assert_eq!(smith_diagonal(&[vec![2, 0], vec![0, 4]]), vec![2, 4]);
        assert_eq!(smith_diagonal(&[vec![2, 1], vec![0, 3]]), vec![1, 6]);
        assert_eq!(smith_diagonal(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(smith_diagonal(&[vec![2]]), vec![2]);
        assert_eq!(smith_diagonal(&[vec![0, 0]]), vec![0]);
    }

    #[test]
    fn root_lattice_of_a2_in_weights() {
        // Cartan matrix rows: index 3 of root lattice in weight lattice
        let (t, free) = quotient_structure(&[vec![2, -1], vec![-1, 2]], 2);
        assert_eq!((t, free), (vec![3], 0));
    }

    #[test]
    fn hermite_is_canonical() {
        let a = hermite_rows(&[vec![2, 1], vec![0, 3]]);
        let b = hermite_rows(&[vec![2, 4], vec![2, 1], vec![4, 5]]);
        assert_eq!(a, b);
    }
}
