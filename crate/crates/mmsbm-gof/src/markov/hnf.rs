//! Integer kernel of a design matrix by Hermite-style row reduction.
//!
//! Reduce the augmented matrix [A^T | I] with unimodular row operations
//! until the left block is in echelon form; the identity-block parts of the
//! rows whose left block vanished form a lattice basis of ker_Z A. All
//! arithmetic is exact (i128 with overflow checks).

use crate::error::{Error, Result};

const MAX_KERNEL_VARS: usize = 64;

fn checked_row_op(row: &mut [i128], pivot: &[i128], q: i128) -> Result<()> {
    for (x, &p) in row.iter_mut().zip(pivot.iter()) {
        let prod = q.checked_mul(p).ok_or_else(overflow)?;
        *x = x.checked_sub(prod).ok_or_else(overflow)?;
    }
    Ok(())
}

fn overflow() -> Error {
    Error::Capacity("integer overflow during kernel reduction".into())
}

/// Lattice basis of the integer kernel {v : A v = 0} of a dense m x n
/// integer matrix with n <= 64 columns.
pub fn kernel_lattice_basis(a: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::Shape("ragged matrix".into()));
    }
    if n > MAX_KERNEL_VARS {
        return Err(Error::Capacity(format!(
            "kernel reduction supports at most {MAX_KERNEL_VARS} columns, got {n}"
        )));
    }

    // Augmented rows: row v = [column v of A | e_v].
    let mut aug: Vec<Vec<i128>> = (0..n)
        .map(|v| {
            let mut row = Vec::with_capacity(m + n);
            row.extend(a.iter().map(|arow| arow[v] as i128));
            row.extend((0..n).map(|w| i128::from(w == v)));
            row
        })
        .collect();

    let mut rank = 0usize;
    for col in 0..m {
        loop {
            let nonzero: Vec<usize> = (rank..n).filter(|&r| aug[r][col] != 0).collect();
            match nonzero.len() {
                0 => break,
                1 => {
                    let p = nonzero[0];
                    aug.swap(rank, p);
                    if aug[rank][col] < 0 {
                        aug[rank].iter_mut().for_each(|x| *x = -*x);
                    }
                    rank += 1;
                    break;
                }
                _ => {
                    // Reduce everything by the row with the smallest pivot.
                    let p = *nonzero
                        .iter()
                        .min_by_key(|&&r| aug[r][col].unsigned_abs())
                        .unwrap();
                    let pivot = aug[p].clone();
                    for &q in &nonzero {
                        if q == p {
                            continue;
                        }
                        let quot = aug[q][col].div_euclid(pivot[col]);
                        if quot != 0 {
                            checked_row_op(&mut aug[q], &pivot, quot)?;
                        }
                    }
                }
            }
        }
    }

    let mut basis = Vec::new();
    for row in aug.iter().skip(rank) {
        debug_assert!(row[..m].iter().all(|&x| x == 0));
        let v: Vec<i64> = row[m..]
            .iter()
            .map(|&x| i64::try_from(x).map_err(|_| overflow()))
            .collect::<Result<_>>()?;
        basis.push(v);
    }
    Ok(basis)
}
