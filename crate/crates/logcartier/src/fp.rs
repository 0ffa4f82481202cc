//! Prime-field scalars with a runtime-chosen modulus, and dense matrices over them.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Element of F_p. Carries its modulus so arithmetic can check compatibility.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Fp {
    v: u32,
    p: u32,
}

impl Fp {
    pub fn new(v: i64, p: u32) -> Fp {
        debug_assert!(p >= 2);
        let m = p as i64;
        Fp {
            v: (((v % m) + m) % m) as u32,
            p,
        }
    }

    pub fn zero(p: u32) -> Fp {
        Fp { v: 0, p }
    }

    pub fn one(p: u32) -> Fp {
        Fp::new(1, p)
    }

    pub fn val(self) -> u32 {
        self.v
    }

    pub fn modulus(self) -> u32 {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.v == 0
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; panics on zero (the modulus is prime).
    pub fn inv(self) -> Fp {
        assert!(self.v != 0, "division by zero in F_{}", self.p);
        self.pow(self.p as u64 - 2)
    }

    fn chk(self, o: Fp) {
        assert_eq!(self.p, o.p, "mixed moduli {} and {}", self.p, o.p);
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, o: Fp) -> Fp {
        self.chk(o);
        let s = self.v + o.v;
        Fp {
            v: if s >= self.p { s - self.p } else { s },
            p: self.p,
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, o: Fp) -> Fp {
        self.chk(o);
        let s = self.v + self.p - o.v;
        Fp {
            v: if s >= self.p { s - self.p } else { s },
            p: self.p,
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, o: Fp) -> Fp {
        self.chk(o);
        Fp {
            v: ((self.v as u64 * o.v as u64) % self.p as u64) as u32,
            p: self.p,
        }
    }
}

impl Div for Fp {
    type Output = Fp;
    fn div(self, o: Fp) -> Fp {
        self * o.inv()
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp {
            v: if self.v == 0 { 0 } else { self.p - self.v },
            p: self.p,
        }
    }
}

impl AddAssign for Fp {
    fn add_assign(&mut self, o: Fp) {
        *self = *self + o;
    }
}

impl SubAssign for Fp {
    fn sub_assign(&mut self, o: Fp) {
        *self = *self - o;
    }
}

impl MulAssign for Fp {
    fn mul_assign(&mut self, o: Fp) {
        *self = *self * o;
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

/// Binomial coefficient mod p (entries can exceed p; computed integrally then reduced).
pub fn binom_mod(n: u64, k: u64, p: u32) -> Fp {
    if k > n {
        return Fp::zero(p);
    }
    // Lucas' theorem keeps everything small.
    let (mut n, mut k) = (n, k);
    let pp = p as u64;
    let mut acc = Fp::one(p);
    while n > 0 || k > 0 {
        let (nd, kd) = (n % pp, k % pp);
        if kd > nd {
            return Fp::zero(p);
        }
        // small binomial nd choose kd, nd < p
        let mut num = Fp::one(p);
        let mut den = Fp::one(p);
        for i in 0..kd {
            num *= Fp::new((nd - i) as i64, p);
            den *= Fp::new((i + 1) as i64, p);
        }
        acc *= num * den.inv();
        n /= pp;
        k /= pp;
    }
    acc
}

/// Factorial mod p for n < p (asserted).
pub fn factorial_mod(n: u64, p: u32) -> Fp {
    assert!(n < p as u64, "factorial_mod needs n < p");
    let mut acc = Fp::one(p);
    for i in 2..=n {
        acc *= Fp::new(i as i64, p);
    }
    acc
}

/// Dense matrix over F_p.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FpMat {
    pub rows: usize,
    pub cols: usize,
    pub p: u32,
    dat: Vec<u32>,
}

impl FpMat {
    pub fn zero(rows: usize, cols: usize, p: u32) -> FpMat {
        FpMat {
            rows,
            cols,
            p,
            dat: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, p: u32) -> FpMat {
        let mut m = FpMat::zero(n, n, p);
        for i in 0..n {
            m.set(i, i, Fp::one(p));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>], p: u32) -> FpMat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = FpMat::zero(r, c, p);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, Fp::new(x, p));
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Fp {
        Fp {
            v: self.dat[i * self.cols + j],
            p: self.p,
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Fp) {
        assert_eq!(v.modulus(), self.p);
        self.dat[i * self.cols + j] = v.val();
    }

    pub fn is_zero(&self) -> bool {
        self.dat.iter().all(|&x| x == 0)
    }

    pub fn add(&self, o: &FpMat) -> FpMat {
        assert!(self.rows == o.rows && self.cols == o.cols && self.p == o.p);
        let mut m = self.clone();
        for (a, b) in m.dat.iter_mut().zip(o.dat.iter()) {
            let s = *a + *b;
            *a = if s >= self.p { s - self.p } else { s };
        }
        m
    }

    pub fn sub(&self, o: &FpMat) -> FpMat {
        assert!(self.rows == o.rows && self.cols == o.cols && self.p == o.p);
        let mut m = self.clone();
        for (a, b) in m.dat.iter_mut().zip(o.dat.iter()) {
            let s = *a + self.p - *b;
            *a = if s >= self.p { s - self.p } else { s };
        }
        m
    }

    pub fn neg(&self) -> FpMat {
        FpMat::zero(self.rows, self.cols, self.p).sub(self)
    }

    pub fn scale(&self, s: Fp) -> FpMat {
        let mut m = self.clone();
        for a in m.dat.iter_mut() {
            *a = ((*a as u64 * s.val() as u64) % self.p as u64) as u32;
        }
        m
    }

    pub fn mul(&self, o: &FpMat) -> FpMat {
        assert_eq!(self.cols, o.rows);
        assert_eq!(self.p, o.p);
        let mut m = FpMat::zero(self.rows, o.cols, self.p);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.dat[i * self.cols + k] as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let cur = m.dat[i * o.cols + j] as u64;
                    m.dat[i * o.cols + j] =
                        ((cur + a * o.dat[k * o.cols + j] as u64) % self.p as u64) as u32;
                }
            }
        }
        m
    }

    pub fn pow(&self, e: u64) -> FpMat {
        assert_eq!(self.rows, self.cols);
        let mut acc = FpMat::identity(self.rows, self.p);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn transpose(&self) -> FpMat {
        let mut m = FpMat::zero(self.cols, self.rows, self.p);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j));
            }
        }
        m
    }

    /// Stack `o` below `self`.
    pub fn vstack(&self, o: &FpMat) -> FpMat {
        assert!(self.cols == o.cols && self.p == o.p);
        let mut m = FpMat::zero(self.rows + o.rows, self.cols, self.p);
        m.dat[..self.dat.len()].copy_from_slice(&self.dat);
        m.dat[self.dat.len()..].copy_from_slice(&o.dat);
        m
    }

    /// Put `o` to the right of `self`.
    pub fn hstack(&self, o: &FpMat) -> FpMat {
        assert!(self.rows == o.rows && self.p == o.p);
        let mut m = FpMat::zero(self.rows, self.cols + o.cols, self.p);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j));
            }
            for j in 0..o.cols {
                m.set(i, self.cols + j, o.get(i, j));
            }
        }
        m
    }

    /// Row-echelon reduction in place; returns pivot columns. Forward elimination,
    /// scanning rows top-down for the first nonzero pivot in each column.
    fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let mut sel = None;
            for i in row..self.rows {
                if self.dat[i * self.cols + col] != 0 {
                    sel = Some(i);
                    break;
                }
            }
            let Some(sel) = sel else { continue };
            for j in 0..self.cols {
                self.dat.swap(row * self.cols + j, sel * self.cols + j);
            }
            let inv = self.get(row, col).inv();
            for j in col..self.cols {
                let v = self.get(row, j) * inv;
                self.set(row, j, v);
            }
            for i in 0..self.rows {
                if i == row {
                    continue;
                }
                let f = self.get(i, col);
                if f.is_zero() {
                    continue;
                }
                for j in col..self.cols {
                    let v = self.get(i, j) - f * self.get(row, j);
                    self.set(i, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Rank via row echelon (primary route).
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().len()
    }

    /// Rank via column elimination (independent second route: different data walk,
    /// pivots chosen scanning columns right-to-left and rows bottom-up).
    pub fn rank_col_elim(&self) -> usize {
        let mut cols: Vec<Vec<u32>> = (0..self.cols)
            .rev()
            .map(|j| (0..self.rows).map(|i| self.dat[i * self.cols + j]).collect())
            .collect();
        let p = self.p as u64;
        let mut rank = 0;
        for row in (0..self.rows).rev() {
            let mut sel = None;
            for (ci, c) in cols.iter().enumerate().skip(rank) {
                if c[row] != 0 {
                    sel = Some(ci);
                    break;
                }
            }
            let Some(sel) = sel else { continue };
            cols.swap(rank, sel);
            let inv = Fp {
                v: cols[rank][row],
                p: self.p,
            }
            .inv()
            .val() as u64;
            for x in cols[rank].iter_mut() {
                *x = ((*x as u64 * inv) % p) as u32;
            }
            let pivot_col = cols[rank].clone();
            for (ci, c) in cols.iter_mut().enumerate() {
                if ci == rank || c[row] == 0 {
                    continue;
                }
                let f = c[row] as u64;
                for (x, pv) in c.iter_mut().zip(pivot_col.iter()) {
                    *x = ((*x as u64 + (p - f % p) * *pv as u64) % p) as u32;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Basis of the right kernel { x : A x = 0 }, deterministic order (free columns ascending).
    pub fn kernel(&self) -> Vec<Vec<Fp>> {
        let mut m = self.clone();
        let pivots = m.row_reduce();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Fp::zero(self.p); self.cols];
            v[free] = Fp::one(self.p);
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.get(ri, free);
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of A x = b, or None when inconsistent.
    pub fn solve(&self, b: &[Fp]) -> Option<Vec<Fp>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = FpMat::zero(self.rows, self.cols + 1, self.p);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.row_reduce();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Fp::zero(self.p); self.cols];
        for (ri, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(ri, self.cols);
        }
        Some(x)
    }

    pub fn apply(&self, x: &[Fp]) -> Vec<Fp> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Fp::zero(self.p);
                for j in 0..self.cols {
                    acc += self.get(i, j) * x[j];
                }
                acc
            })
            .collect()
    }

    pub fn from_cols_fp(cols: &[Vec<Fp>], rows: usize, p: u32) -> FpMat {
        let mut m = FpMat::zero(rows, cols.len(), p);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn commutes_with(&self, o: &FpMat) -> bool {
        self.mul(o) == o.mul(self)
    }
}

impl fmt::Display for FpMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
