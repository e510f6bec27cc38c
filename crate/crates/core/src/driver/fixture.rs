//! Sylvester-resultant benchmark inputs.
//!
//! `res(A, B)` for `A = a0 + a1 x + ... + am x^m` and `B = b0 + ... + bn x^n`
//! is the determinant of the `(m+n) x (m+n)` Sylvester matrix, a polynomial in
//! the `m+n+2` coefficient symbols.

use crate::poly::{Monomial, Polynomial, Symbols, VarId};

/// Symbols `a0..am, b0..bn` in that declaration order.
pub fn resultant_symbols(m: usize, n: usize) -> Symbols {
    let names = (0..=m).map(|i| format!("a{}", i)).chain((0..=n).map(|i| format!("b{}", i)));
    Symbols::new(names).expect("names are distinct")
}

/// Sylvester matrix entries as variable ids (`None` is a zero entry).
pub fn sylvester_matrix(m: usize, n: usize) -> Vec<Vec<Option<VarId>>> {
    let size = m + n;
    let mut rows = vec![vec![None; size]; size];
    // n shifted copies of A's coefficients, leading coefficient first
    for (r, row) in rows.iter_mut().enumerate().take(n) {
        for k in 0..=m {
            row[r + k] = Some((m - k) as VarId);
        }
    }
    for r in 0..m {
        for k in 0..=n {
            rows[n + r][r + k] = Some((m + 1 + n - k) as VarId);
        }
    }
    rows
}

/// Expanded resultant of generic polynomials of degrees `m` and `n`.
pub fn resultant_fixture(m: usize, n: usize) -> (Symbols, Polynomial) {
    assert!(m >= 1 && n >= 1, "degrees must be positive");
    (resultant_symbols(m, n), minor_expansion_determinant(&sylvester_matrix(m, n)))
}

/// The Sylvester matrix with polynomial entries.
pub fn sylvester_polynomials(m: usize, n: usize) -> Vec<Vec<Polynomial>> {
    sylvester_matrix(m, n)
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.map(Polynomial::var).unwrap_or_default()).collect())
        .collect()
}

/// Determinant over the integer polynomial ring by Bareiss elimination.
/// Every division is exact.
pub fn bareiss_determinant(mut a: Vec<Vec<Polynomial>>) -> Polynomial {
    let n = a.len();
    if n == 0 {
        return Polynomial::constant(1);
    }
    let mut negate = false;
    let mut prev = Polynomial::constant(1);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return Polynomial::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[k][k].mul(&a[i][j]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = t.div_exact(&prev).expect("Bareiss division is exact");
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

/// Determinant of a matrix whose entries are single variables or zero, by
/// row-wise minor expansion memoized on the set of remaining columns.
pub fn minor_expansion_determinant(matrix: &[Vec<Option<VarId>>]) -> Polynomial {
    let n = matrix.len();
    assert!(n < 32);
    // minors[mask] for masks of the current size
    let mut minors: std::collections::HashMap<u32, Polynomial> = std::collections::HashMap::new();
    minors.insert(0, Polynomial::constant(1));
    for size in 1..=n {
        let row = n - size;
        let mut next = std::collections::HashMap::new();
        for (&mask, _) in minors.iter() {
            for c in 0..n {
                if mask & (1 << c) != 0 {
                    continue;
                }
                let bigger = mask | (1 << c);
                if next.contains_key(&bigger) {
                    continue;
                }
                let mut det = Polynomial::zero();
                for col in 0..n {
                    if bigger & (1 << col) == 0 {
                        continue;
                    }
                    let Some(v) = matrix[row][col] else { continue };
                    let Some(sub) = minors.get(&(bigger & !(1 << col))) else { continue };
                    let below = (bigger & ((1u32 << col) - 1)).count_ones();
                    let sign = if below % 2 == 0 { 1 } else { -1 };
                    det = det.add(&sub.mul_monomial(&sign.into(), &Monomial::var(v)));
                }
                next.insert(bigger, det);
            }
        }
        minors = next;
    }
    minors.remove(&((1u32 << n) - 1)).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::CountOps;

    #[test]
    fn one_by_one_resultant() {
        // res(a0 + a1 x, b0 + b1 x) = a1 b0 - a0 b1 up to sign
        let (syms, r) = resultant_fixture(1, 1);
        let a0 = Polynomial::var(syms.id("a0").unwrap());
        let a1 = Polynomial::var(syms.id("a1").unwrap());
        let b0 = Polynomial::var(syms.id("b0").unwrap());
        let b1 = Polynomial::var(syms.id("b1").unwrap());
        let expect = a1.mul(&b0).sub(&a0.mul(&b1));
        assert!(r == expect || r == expect.neg());
    }

    #[test]
    fn elimination_matches_minor_expansion() {
        for (m, n) in [(2, 1), (2, 2), (3, 2), (4, 3), (5, 3)] {
            let bareiss = bareiss_determinant(sylvester_polynomials(m, n));
            let (_, minors) = resultant_fixture(m, n);
            assert!(bareiss == minors || bareiss == minors.neg(), "{}-{}", m, n);
        }
    }

    #[test]
    fn resultant_vanishes_on_common_root() {
        // A = (x - 2)(x + 1) = x^2 - x - 2, B = (x - 2) = x - 2
        let (syms, r) = resultant_fixture(2, 1);
        let mut point = vec![0u64; syms.len()];
        let p = crate::eval::MERSENNE_31;
        let set = |point: &mut Vec<u64>, name: &str, v: i64| {
            point[syms.id(name).unwrap() as usize] = crate::eval::residue(&v.into(), p);
        };
        set(&mut point, "a0", -2);
        set(&mut point, "a1", -1);
        set(&mut point, "a2", 1);
        set(&mut point, "b0", -2);
        set(&mut point, "b1", 1);
        use crate::eval::EvalMod;
        assert_eq!(r.eval_mod(&point, p).unwrap(), vec![0]);
    }

    #[test]
    fn small_resultant_counts() {
        let (_, r) = resultant_fixture(1, 1);
        assert_eq!(r.count_ops().to_string(), "0P 2M 1A : 3");
    }

    #[test]
    fn benchmark_sizes() {
        let (_, r) = resultant_fixture(7, 4);
        assert_eq!(r.num_terms(), 2562);
        assert_eq!(r.count_ops().total, 29163);
    }
}
