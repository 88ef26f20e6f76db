//! Small dense and tridiagonal linear algebra kernels.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Tridiagonal matrix stored by diagonals: `sub[i] = M[i+1][i]`, `sup[i] = M[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Real> Tridiag<T> {
    pub fn zeros(n: usize) -> Self {
        let m = n.saturating_sub(1);
        Self { sub: vec![T::zero(); m], diag: vec![T::zero(); n], sup: vec![T::zero(); m] }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n);
        t.diag.iter_mut().for_each(|d| *d = T::one());
        t
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            T::zero()
        }
    }

    pub fn matvec(&self, x: &[T], out: &mut [T]) {
        let n = self.n();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s = s + self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s = s + self.sup[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    pub fn transpose(&self) -> Self {
        Self { sub: self.sup.clone(), diag: self.diag.clone(), sup: self.sub.clone() }
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: T, beta: T) -> Self {
        Self {
            sub: self.sub.iter().map(|&v| beta * v).collect(),
            diag: self.diag.iter().map(|&v| alpha + beta * v).collect(),
            sup: self.sup.iter().map(|&v| beta * v).collect(),
        }
    }

    /// Symmetric part `(M + M^T) / 2`.
    pub fn symmetric_part(&self) -> Self {
        let half = lit::<T>(0.5);
        let off: Vec<T> = self.sub.iter().zip(&self.sup).map(|(&a, &b)| half * (a + b)).collect();
        Self { sub: off.clone(), diag: self.diag.clone(), sup: off }
    }

    pub fn to_dense(&self) -> Dense<T> {
        let n = self.n();
        let mut d = Dense::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                d.set(i, j, self.get(i, j));
            }
        }
        d
    }

    pub fn factor(&self) -> Result<TridiagLu<T>> {
        TridiagLu::new(self)
    }
}

/// LU factorization of a tridiagonal matrix with partial pivoting.
#[derive(Debug, Clone)]
pub struct TridiagLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    ipiv: Vec<bool>,
}

impl<T: Real> TridiagLu<T> {
    pub fn new(m: &Tridiag<T>) -> Result<Self> {
        let n = m.n();
        let mut dl = m.sub.clone();
        let mut d = m.diag.clone();
        let mut du = m.sup.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut ipiv = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == T::zero() {
                    return Err(Error::Singular { row: i, pivot: 0.0 });
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] = d[i + 1] - f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                ipiv[i] = true;
            }
        }
        for (row, &p) in d.iter().enumerate() {
            if p == T::zero() || !p.is_finite() {
                return Err(Error::Singular { row, pivot: p.to_f64().unwrap_or(f64::NAN) });
            }
        }
        Ok(Self { dl, d, du, du2, ipiv })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n();
        for i in 0..n.saturating_sub(1) {
            if self.ipiv[i] {
                b.swap(i, i + 1);
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Row-major square dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n);
        for i in 0..n {
            d.set(i, i, T::one());
        }
        d
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut d = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                d.set(i, j, f(i, j));
            }
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = dot(self.row(i), x);
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let idx = i * n + j;
                    out.data[idx] = out.data[idx] + a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add_diag(&mut self, d: &[T]) {
        for (i, &v) in d.iter().enumerate() {
            let cur = self.get(i, i);
            self.set(i, i, cur + v);
        }
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|v| *v = *v * s);
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest column absolute sum (the l1 -> l1 operator norm).
    pub fn max_col_abs_sum(&self) -> T {
        (0..self.n).map(|j| (0..self.n).fold(T::zero(), |s, i| s + self.get(i, j).abs())).fold(T::zero(), T::max)
    }

    pub fn lu(&self) -> Result<DenseLu<T>> {
        DenseLu::new(self)
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    lu: Dense<T>,
    perm: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub fn new(m: &Dense<T>) -> Result<Self> {
        let n = m.n();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pv) =
                (k..n)
                    .map(|i| (i, lu.get(i, k).abs()))
                    .fold((k, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
            if pv == T::zero() || !pv.is_finite() {
                return Err(Error::Singular { row: k, pivot: 0.0 });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let a = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, a);
                }
            }
            let piv = lu.get(k, k);
            for i in (k + 1)..n {
                let f = lu.get(i, k) / piv;
                lu.set(i, k, f);
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let v = lu.get(i, j) - f * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// Returns eigenvalues in ascending order and, if requested, the matching
/// orthonormal eigenvectors as the columns of a dense matrix.
pub fn symmetric_tridiagonal_eigen<T: Real>(
    diag: &[T],
    off: &[T],
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Dense<T>>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = if want_vectors { Some(Dense::identity(n)) } else { None };
    let two = lit::<T>(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigen);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r } else { -r });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    for k in 0..n {
                        let f2 = z.get(k, i + 1);
                        let zi = z.get(k, i);
                        z.set(k, i + 1, s * zi + c * f2);
                        z.set(k, i, c * zi - s * f2);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = z.map(|z| {
        let mut out = Dense::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                out.set(row, col, z.get(row, src));
            }
        }
        out
    });
    Ok((vals, vecs))
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(m: &Dense<T>) -> Result<Vec<T>> {
    let n = m.n();
    let mut a = m.clone();
    let two = lit::<T>(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let v = a.get(i, j) * a.get(i, j);
                total = total + v;
                if i != j {
                    off = off + v;
                }
            }
        }
        if off <= T::epsilon() * T::epsilon() * total || off == T::zero() {
            let mut vals: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            return Ok(vals);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Err(Error::Eigen)
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi = *yi + alpha * xi);
}

pub fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}
