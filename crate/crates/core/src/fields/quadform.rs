//! Solution counts of nondegenerate quadratic forms, by enumeration and by the
//! closed formulas for even and odd numbers of variables.

use crate::error::{Error, Result};

use super::{Elem, FieldCtx};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadFormCount {
    pub enumerated: u64,
    pub closed_form: i64,
    pub determinant: Elem,
}

pub fn determinant(f: &FieldCtx, matrix: &[Vec<Elem>]) -> Elem {
    let n = matrix.len();
    let mut a: Vec<Vec<Elem>> = matrix.to_vec();
    let mut det = Elem::ONE;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Elem::ZERO;
        };
        if piv != col {
            a.swap(piv, col);
            det = f.neg(det);
        }
        det = f.mul(det, a[col][col]);
        let inv = f.inv(a[col][col]).unwrap();
        for r in col + 1..n {
            let factor = f.mul(a[r][col], inv);
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let t = f.mul(factor, a[col][c]);
                a[r][c] = f.sub(a[r][c], t);
            }
        }
    }
    det
}

fn evaluate(f: &FieldCtx, matrix: &[Vec<Elem>], x: &[Elem]) -> Elem {
    let mut acc = Elem::ZERO;
    for (i, row) in matrix.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            acc = f.add(acc, f.mul(a, f.mul(x[i], x[j])));
        }
    }
    acc
}

/// Counts solutions of xᵀAx = b for a symmetric, nonsingular A. Fails if the
/// enumeration and the closed form disagree.
pub fn quadratic_form_count(f: &FieldCtx, matrix: &[Vec<Elem>], b: Elem) -> Result<QuadFormCount> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("form matrix must be square and nonempty".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if matrix[i][j] != matrix[j][i] {
                return Err(Error::InvalidArgument("form matrix must be symmetric".into()));
            }
        }
    }
    let delta = determinant(f, matrix);
    if delta.is_zero() {
        return Err(Error::InvalidArgument("quadratic form is degenerate".into()));
    }
    let q = f.order() as u64;
    let total = q.checked_pow(n as u32).filter(|&t| t <= 1 << 26).ok_or_else(|| {
        Error::Unsupported(format!("enumerating {q}^{n} vectors"))
    })?;

    let mut enumerated = 0u64;
    let mut x = vec![Elem::ZERO; n];
    for k in 0..total {
        let mut kk = k;
        for xi in x.iter_mut() {
            *xi = Elem((kk % q) as u32);
            kk /= q;
        }
        if evaluate(f, matrix, &x) == b {
            enumerated += 1;
        }
    }

    let qi = q as i64;
    let minus_one = f.neg(Elem::ONE);
    let closed_form = if n.is_multiple_of(2) {
        let v = if b.is_zero() { qi - 1 } else { -1 };
        let sign = f.pow(minus_one, n as u64 / 2);
        let eta = f.quadratic_character(f.mul(sign, delta)) as i64;
        qi.pow(n as u32 - 1) + v * qi.pow((n as u32 - 2) / 2) * eta
    } else {
        let sign = f.pow(minus_one, (n as u64 - 1) / 2);
        let eta = f.quadratic_character(f.mul(sign, f.mul(b, delta))) as i64;
        qi.pow(n as u32 - 1) + qi.pow((n as u32 - 1) / 2) * eta
    };

    if closed_form != enumerated as i64 {
        return Err(Error::violation(
            "quadratic form count",
            format!("enumeration {enumerated} != closed form {closed_form}"),
        ));
    }
    Ok(QuadFormCount {
        enumerated,
        closed_form,
        determinant: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;

    #[test]
    fn sum_of_two_squares_gf3() {
        let f = FieldCtx::new(&FieldSpec::new(3, 1)).unwrap();
        let id = vec![vec![Elem(1), Elem(0)], vec![Elem(0), Elem(1)]];
        let c = quadratic_form_count(&f, &id, Elem(1)).unwrap();
        assert_eq!(c.enumerated, 4);
        let c0 = quadratic_form_count(&f, &id, Elem(0)).unwrap();
        assert_eq!(c0.enumerated, 1);
    }

    #[test]
    fn single_square_zero() {
        let f = FieldCtx::new(&FieldSpec::new(5, 1)).unwrap();
        let c = quadratic_form_count(&f, &[vec![Elem(1)]], Elem(0)).unwrap();
        assert_eq!(c.enumerated, 1);
    }

    #[test]
    fn degenerate_rejected() {
        let f = FieldCtx::new(&FieldSpec::new(3, 1)).unwrap();
        let m = vec![vec![Elem(1), Elem(1)], vec![Elem(1), Elem(1)]];
        assert!(quadratic_form_count(&f, &m, Elem(1)).is_err());
    }
}
