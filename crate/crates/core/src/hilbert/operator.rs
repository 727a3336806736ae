use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense square operator stored row-major.
///
/// The structural nonzeros are indexed once at construction so that
/// `apply` costs O(nnz); every ladder/spin operator used by the trajectory
/// code is very sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
    nonzeros: Vec<(usize, usize, C64)>,
    hermitian: bool,
}

impl Operator {
    pub fn from_data(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("operator dimension must be positive".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(Self::build(dim, data))
    }

    fn build(dim: usize, data: Vec<C64>) -> Self {
        let nonzeros = data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(|(k, v)| (k / dim, k % dim, *v))
            .collect();
        let mut dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                dev = dev.max((data[i * dim + j] - data[j * dim + i].conj()).norm());
            }
        }
        Self { dim, data, nonzeros, hermitian: dev <= 1e-12 }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::build(dim, data)
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::build(dim, vec![ZERO; dim * dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diagonal_from(diag: &[C64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn nonzeros(&self) -> &[(usize, usize, C64)] {
        &self.nonzeros
    }

    /// Whether `max |A - A^dagger| <= 1e-12`.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_diagonal(&self) -> bool {
        self.nonzeros.iter().all(|&(i, j, _)| i == j)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Off-diagonal part of the operator.
    pub fn off_diagonal(&self) -> Self {
        Self::from_fn(self.dim, |i, j| if i == j { ZERO } else { self.get(i, j) })
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::build(self.dim, self.data.iter().map(|v| v * s).collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `out = A x`.
    #[inline]
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        out.fill(ZERO);
        for &(i, j, v) in &self.nonzeros {
            out[i] += v * x[j];
        }
    }

    /// `out += s A x`.
    #[inline]
    pub fn apply_add(&self, s: C64, x: &[C64], out: &mut [C64]) {
        for &(i, j, v) in &self.nonzeros {
            out[i] += s * v * x[j];
        }
    }

    /// `<x|A|x>` without normalisation.
    #[inline]
    pub fn sandwich(&self, x: &[C64]) -> C64 {
        let mut acc = ZERO;
        for &(i, j, v) in &self.nonzeros {
            acc += x[i].conj() * v * x[j];
        }
        acc
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for &(i, k, v) in &self.nonzeros {
            let row = &other.data[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, r) in dst.iter_mut().zip(row) {
                *d += v * r;
            }
        }
        Ok(Self::build(n, out))
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// Kronecker product; `self` carries the slow index.
    pub fn kron(&self, other: &Operator) -> Operator {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |r, c| self.get(r / b, c / b) * other.get(r % b, c % b))
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data.iter().zip(&other.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator::build(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator::build(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimension mismatch")
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

// Standard operators. Spin basis: index 0 = up, 1 = down.

pub fn sigma_z() -> Operator {
    Operator::diagonal_from(&[ONE, -ONE])
}

pub fn sigma_x() -> Operator {
    Operator::from_rows([[ZERO, ONE], [ONE, ZERO]])
}

pub fn sigma_y() -> Operator {
    Operator::from_rows([[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]])
}

/// Raising operator `|up><down|`.
pub fn sigma_plus() -> Operator {
    Operator::from_rows([[ZERO, ONE], [ZERO, ZERO]])
}

/// Lowering operator `|down><up|`.
pub fn sigma_minus() -> Operator {
    Operator::from_rows([[ZERO, ZERO], [ONE, ZERO]])
}

/// Truncated annihilation operator on Fock levels `0..dim`.
pub fn annihilation(dim: usize) -> Operator {
    Operator::from_fn(dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { ZERO })
}

pub fn creation(dim: usize) -> Operator {
    annihilation(dim).dagger()
}

pub fn number(dim: usize) -> Operator {
    Operator::diagonal_from(&(0..dim).map(|n| C64::new(n as f64, 0.0)).collect::<Vec<_>>())
}
