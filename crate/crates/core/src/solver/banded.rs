//! Banded LU with partial pivoting.

use std::ops::{Div, Mul, SubAssign};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` slots hold
/// the fill produced by row interchanges during factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; n * (2 * kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width() + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec<T>(&self, x: &[T], out: &mut [T])
    where
        T: Copy + Default + std::ops::AddAssign + Mul<f64, Output = T>,
    {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = T::default();
            for j in lo..=hi {
                acc += x[j] * self.data[self.slot(i, j)];
            }
            *o = acc;
        }
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Factor in place. Returns `Err((row, pivot))` on a vanishing pivot.
    pub fn factor(mut self) -> Result<BandLu, (usize, f64)> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err((k, best));
            }
            piv[k] = p;
            let right = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.slot(k, k)];
            for i in k + 1..=last {
                let sik = self.slot(i, k);
                let l = self.data[sik] / d;
                self.data[sik] = l;
                if l != 0.0 {
                    for j in k + 1..=right {
                        let u = self.data[self.slot(k, j)];
                        let s = self.slot(i, j);
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { a: self, piv })
    }
}

/// Factors of a [`BandMatrix`]; solves accept real or complex right-hand sides.
#[derive(Clone, Debug, PartialEq)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place<T>(&self, b: &mut [T])
    where
        T: Copy + SubAssign + Mul<f64, Output = T> + Div<f64, Output = T>,
    {
        let a = &self.a;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= bk * a.data[a.slot(i, k)];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                let bj = b[j];
                b[i] -= bj * a.data[a.slot(i, j)];
            }
            b[i] = b[i] / a.data[a.slot(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rustfft::num_complex::Complex64;

    fn dense(m: &BandMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
    }

    fn random_band(n: usize, kl: usize, ku: usize, vals: &[f64]) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, kl, ku);
        let mut it = vals.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, *it.next().unwrap());
            }
        }
        m
    }

    #[test]
    fn needs_pivoting() {
        // zero on the diagonal
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 2, 2.0);
        m.set(2, 1, 3.0);
        m.set(2, 2, 1.0);
        let lu = m.clone().factor().unwrap();
        let mut b = vec![1.0, 2.0, 3.0];
        lu.solve_in_place(&mut b);
        let x = DVector::from_vec(b);
        let r = dense(&m) * x - DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(r.amax() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = BandMatrix::zeros(4, 2, 2);
        assert!(m.factor().is_err());
    }

    #[test]
    fn complex_rhs() {
        let vals: Vec<f64> = (0..40).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let m = random_band(10, 2, 2, &vals);
        let lu = m.clone().factor().unwrap();
        let b: Vec<Complex64> = (0..10)
            .map(|i| Complex64::new(i as f64, 1.0 - i as f64))
            .collect();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let mut ax = vec![Complex64::default(); 10];
        m.mul_vec(&x, &mut ax);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn matches_dense_solve(
            n in 3usize..24,
            kl in 0usize..3,
            ku in 0usize..3,
            vals in prop::collection::vec(-1.0f64..1.0, 16..64),
            rhs in prop::collection::vec(-1.0f64..1.0, 24),
        ) {
            let mut m = random_band(n, kl, ku, &vals);
            for i in 0..n {
                m.add(i, i, 0.05);
            }
            let d = dense(&m);
            let b = DVector::from_column_slice(&rhs[..n]);
            let Some(want) = d.clone().lu().solve(&b) else { return Ok(()); };
            prop_assume!(d.clone().svd(false, false).singular_values.min() > 1e-6);
            let lu = m.factor().unwrap();
            let mut x = rhs[..n].to_vec();
            lu.solve_in_place(&mut x);
            let err = (DVector::from_vec(x) - &want).amax();
            prop_assert!(err < 1e-8 * (1.0 + want.amax()), "err {}", err);
        }
    }
}
