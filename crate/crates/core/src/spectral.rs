//! Characteristic polynomials and the exact expansion test.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{Rat, RatMatrix};

/// Coefficients of `det(λI − M)`, lowest degree first; the last entry is 1.
/// Faddeev–LeVerrier over the rationals.
pub fn charpoly(m: &RatMatrix) -> Result<Vec<Rat>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    let mut coeffs = vec![Rat::zero(); n + 1];
    coeffs[n] = Rat::one();
    let mut aux = RatMatrix::zeros(n, n);
    for k in 1..=n {
        // aux_k = M·aux_{k-1} + c_{n-k+1}·I, c_{n-k} = −tr(M·aux_k)/k
        let mut next = m.mul(&aux);
        for i in 0..n {
            next[(i, i)] += &coeffs[n - k + 1];
        }
        let prod = m.mul(&next);
        let trace = (0..n).fold(Rat::zero(), |acc, i| acc + &prod[(i, i)]);
        coeffs[n - k] = -trace / Rat::from_integer(BigInt::from(k));
        aux = next;
    }
    Ok(coeffs)
}

/// Clears denominators of a rational polynomial.
pub fn integer_polynomial(coeffs: &[Rat]) -> Vec<BigInt> {
    let l = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    coeffs.iter().map(|c| (c * Rat::from_integer(l.clone())).to_integer()).collect()
}

/// All roots strictly inside the unit disk (Schur–Cohn recursion).
pub fn is_schur_stable(coeffs: &[BigInt]) -> bool {
    let mut f: Vec<BigInt> = coeffs.to_vec();
    while f.last().is_some_and(Zero::is_zero) {
        f.pop();
    }
    loop {
        match f.len() {
            0 => return false,
            1 => return true,
            _ => {}
        }
        let n = f.len() - 1;
        let (a0, an) = (f[0].clone(), f[n].clone());
        if an.abs() <= a0.abs() {
            return false;
        }
        // (a_n·f(z) − a_0·f*(z)) / z where f*(z) = z^n f(1/z)
        let next: Vec<BigInt> = (1..=n).map(|k| &an * &f[k] - &a0 * &f[n - k]).collect();
        f = next;
        while f.last().is_some_and(Zero::is_zero) {
            f.pop();
        }
    }
}

/// Every eigenvalue has modulus greater than one.
pub fn is_expanding(m: &RatMatrix) -> Result<bool> {
    let p = charpoly(m)?;
    if p[0].is_zero() {
        return Err(Error::Singular);
    }
    // roots of the reversed polynomial are the reciprocals of the eigenvalues
    let mut reversed = integer_polynomial(&p);
    reversed.reverse();
    Ok(is_schur_stable(&reversed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use rand::{Rng, SeedableRng};

    fn im(rows: &[Vec<i64>]) -> RatMatrix {
        RatMatrix::from_i64_rows(rows).unwrap()
    }

    /// Oracle: Durand–Kerner roots of the monic characteristic polynomial.
    fn numeric_root_moduli(p: &[f64]) -> Vec<f64> {
        let n = p.len() - 1;
        let eval = |z: (f64, f64)| {
            let mut acc = (0.0, 0.0);
            for c in p.iter().rev() {
                acc = (acc.0 * z.0 - acc.1 * z.1 + c, acc.0 * z.1 + acc.1 * z.0);
            }
            acc
        };
        let mut roots: Vec<(f64, f64)> = (0..n).map(|k| {
            let t = 0.4 + 0.9 * k as f64;
            (1.3 * t.cos(), 1.3 * t.sin())
        }).collect();
        for _ in 0..2000 {
            for i in 0..n {
                let num = eval(roots[i]);
                let mut den = (1.0, 0.0);
                for j in 0..n {
                    if i != j {
                        let d = (roots[i].0 - roots[j].0, roots[i].1 - roots[j].1);
                        den = (den.0 * d.0 - den.1 * d.1, den.0 * d.1 + den.1 * d.0);
                    }
                }
                let q = den.0 * den.0 + den.1 * den.1;
                if q == 0.0 {
                    continue;
                }
                let step = ((num.0 * den.0 + num.1 * den.1) / q, (num.1 * den.0 - num.0 * den.1) / q);
                roots[i] = (roots[i].0 - step.0, roots[i].1 - step.1);
            }
        }
        roots.iter().map(|r| r.0.hypot(r.1)).collect()
    }

    #[test]
    fn charpoly_small() {
        assert_eq!(charpoly(&im(&[vec![1, -1], vec![1, 1]])).unwrap(), vec![int(2), int(-2), int(1)]);
        let m = RatMatrix::diagonal(&[rat(1, 2), int(3), int(-1)]);
        // (λ − 1/2)(λ − 3)(λ + 1) = λ³ − 5/2 λ² − 2λ + 3/2
        assert_eq!(charpoly(&m).unwrap(), vec![rat(3, 2), int(-2), rat(-5, 2), int(1)]);
    }

    #[test]
    fn expansion_examples() {
        assert!(is_expanding(&im(&[vec![2, 0], vec![0, 2]])).unwrap());
        assert!(!is_expanding(&im(&[vec![1, 0], vec![0, 2]])).unwrap());
        assert!(is_expanding(&im(&[vec![1, -1], vec![1, 1]])).unwrap());
        assert!(!is_expanding(&im(&[vec![-1, 0], vec![0, 3]])).unwrap());
        assert!(is_expanding(&RatMatrix::diagonal(&[rat(3, 2), rat(-5, 4)])).unwrap());
        assert!(matches!(is_expanding(&im(&[vec![1, 2], vec![2, 4]])), Err(Error::Singular)));
    }

    #[test]
    fn schur_cohn_matches_numeric_roots() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 600 {
            let d = rng.gen_range(1..=3usize);
            let rows: Vec<Vec<i64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-3..=3)).collect()).collect();
            let m = im(&rows);
            if m.determinant().is_zero() {
                continue;
            }
            let p: Vec<f64> = charpoly(&m).unwrap().iter().map(crate::rational::to_f64).collect();
            let moduli = numeric_root_moduli(&p);
            if moduli.iter().any(|r| (r - 1.0).abs() < 1e-6) {
                // roots on the unit circle: compare only the exact side
                assert!(!is_expanding(&m).unwrap() || moduli.iter().all(|&r| r > 1.0 - 1e-6));
                continue;
            }
            assert_eq!(is_expanding(&m).unwrap(), moduli.iter().all(|&r| r > 1.0), "{m:?} {moduli:?}");
            checked += 1;
        }
    }
}
