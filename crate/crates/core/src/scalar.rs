//! Forward-mode differentiable scalars.
//!
//! A [`DiffScalar`] carries a value together with its partial derivatives
//! with respect to a fixed set of `P` seeded parameters. Arithmetic follows
//! the usual dual-number rules, so any expression built from seeded inputs
//! yields its exact gradient alongside the value.
//!
//! An empty tangent vector stands for a constant: it combines with scalars of
//! any width and never allocates. This keeps value-only simulations free of
//! differentiation overhead.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffScalar {
    pub value: f64,
    /// Partial derivatives, one per seeded parameter. Empty means constant.
    pub tangents: Vec<f64>,
}

impl DiffScalar {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            tangents: Vec::new(),
        }
    }

    pub fn with_tangents(value: f64, tangents: Vec<f64>) -> Self {
        Self { value, tangents }
    }

    /// Scalar whose tangent is the `index`-th unit vector of length `width`.
    pub fn variable(value: f64, index: usize, width: usize) -> Self {
        let mut tangents = vec![0.0; width];
        tangents[index] = 1.0;
        Self { value, tangents }
    }

    pub fn is_constant(&self) -> bool {
        self.tangents.iter().all(|&t| t == 0.0)
    }

    pub fn width(&self) -> usize {
        self.tangents.len()
    }

    /// Derivative with respect to parameter `k` (zero for constants).
    #[inline]
    pub fn tangent(&self, k: usize) -> f64 {
        self.tangents.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.tangents.iter().all(|t| t.is_finite())
    }

    /// Apply a scalar function with known derivative: `f(self)` with slope `df`.
    fn chain(&self, value: f64, slope: f64) -> Self {
        Self {
            value,
            tangents: self.tangents.iter().map(|t| slope * t).collect(),
        }
    }

    pub fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.chain(self.value * factor, factor)
    }

    /// `self + factor * other`, the fused form used in hot loops.
    pub fn add_scaled(&mut self, factor: f64, other: &DiffScalar) {
        self.value += factor * other.value;
        if other.tangents.is_empty() {
            return;
        }
        if self.tangents.is_empty() {
            self.tangents = vec![0.0; other.tangents.len()];
        }
        debug_assert_eq!(self.tangents.len(), other.tangents.len());
        for (t, o) in self.tangents.iter_mut().zip(&other.tangents) {
            *t += factor * o;
        }
    }
}

impl From<f64> for DiffScalar {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

/// Element-wise combination of two tangent vectors where either may be empty.
fn zip_tangents(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Vec::new(),
        (false, true) => a.iter().map(|&x| f(x, 0.0)).collect(),
        (true, false) => b.iter().map(|&y| f(0.0, y)).collect(),
        (false, false) => {
            assert_eq!(a.len(), b.len(), "tangent widths differ");
            a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
        }
    }
}

impl Add for &DiffScalar {
    type Output = DiffScalar;
    fn add(self, rhs: &DiffScalar) -> DiffScalar {
        DiffScalar {
            value: self.value + rhs.value,
            tangents: zip_tangents(&self.tangents, &rhs.tangents, |x, y| x + y),
        }
    }
}

impl Sub for &DiffScalar {
    type Output = DiffScalar;
    fn sub(self, rhs: &DiffScalar) -> DiffScalar {
        DiffScalar {
            value: self.value - rhs.value,
            tangents: zip_tangents(&self.tangents, &rhs.tangents, |x, y| x - y),
        }
    }
}

impl Mul for &DiffScalar {
    type Output = DiffScalar;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &DiffScalar) -> DiffScalar {
        let (u, v) = (self.value, rhs.value);
        DiffScalar {
            value: u * v,
            tangents: zip_tangents(&self.tangents, &rhs.tangents, |du, dv| du * v + u * dv),
        }
    }
}

impl Div for &DiffScalar {
    type Output = DiffScalar;
    fn div(self, rhs: &DiffScalar) -> DiffScalar {
        let (u, v) = (self.value, rhs.value);
        let v2 = v * v;
        DiffScalar {
            value: u / v,
            tangents: zip_tangents(&self.tangents, &rhs.tangents, |du, dv| (du * v - u * dv) / v2),
        }
    }
}

impl Neg for &DiffScalar {
    type Output = DiffScalar;
    fn neg(self) -> DiffScalar {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for DiffScalar {
            type Output = DiffScalar;
            fn $method(self, rhs: DiffScalar) -> DiffScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&DiffScalar> for DiffScalar {
            type Output = DiffScalar;
            fn $method(self, rhs: &DiffScalar) -> DiffScalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<f64> for DiffScalar {
            type Output = DiffScalar;
            fn $method(self, rhs: f64) -> DiffScalar {
                (&self).$method(&DiffScalar::constant(rhs))
            }
        }
        impl $trait<f64> for &DiffScalar {
            type Output = DiffScalar;
            fn $method(self, rhs: f64) -> DiffScalar {
                self.$method(&DiffScalar::constant(rhs))
            }
        }
        impl $trait<DiffScalar> for f64 {
            type Output = DiffScalar;
            fn $method(self, rhs: DiffScalar) -> DiffScalar {
                (&DiffScalar::constant(self)).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for DiffScalar {
    type Output = DiffScalar;
    fn neg(self) -> DiffScalar {
        -&self
    }
}

impl AddAssign<&DiffScalar> for DiffScalar {
    fn add_assign(&mut self, rhs: &DiffScalar) {
        self.add_scaled(1.0, rhs);
    }
}

/// Complex number over differentiable real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffComplex {
    pub re: DiffScalar,
    pub im: DiffScalar,
}

impl DiffComplex {
    pub fn new(re: DiffScalar, im: DiffScalar) -> Self {
        Self { re, im }
    }

    pub fn real(re: DiffScalar) -> Self {
        Self {
            re,
            im: DiffScalar::constant(0.0),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn norm_sqr(&self) -> DiffScalar {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    /// Multiply by the imaginary unit.
    pub fn mul_i(&self) -> Self {
        Self {
            re: -&self.im,
            im: self.re.clone(),
        }
    }
}

impl Add for &DiffComplex {
    type Output = DiffComplex;
    fn add(self, rhs: &DiffComplex) -> DiffComplex {
        DiffComplex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &DiffComplex {
    type Output = DiffComplex;
    fn sub(self, rhs: &DiffComplex) -> DiffComplex {
        DiffComplex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &DiffComplex {
    type Output = DiffComplex;
    fn mul(self, rhs: &DiffComplex) -> DiffComplex {
        DiffComplex::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Div for &DiffComplex {
    type Output = DiffComplex;
    fn div(self, rhs: &DiffComplex) -> DiffComplex {
        let denom = rhs.norm_sqr();
        let num = self * &rhs.conj();
        DiffComplex::new(&num.re / &denom, &num.im / &denom)
    }
}

/// Seed `values` as independent variables: the k-th output has tangent e_k.
pub fn seed_parameters(values: &[f64]) -> Result<Vec<DiffScalar>> {
    if values.is_empty() {
        return Err(Error::config("parameters", "at least one parameter must be seeded"));
    }
    let width = values.len();
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, &v)| DiffScalar::variable(v, k, width))
        .collect())
}

/// Gradient of `objective` with respect to the seeded parameters.
///
/// A constant objective (no tangents recorded) returns zeros of `width`.
pub fn gradient(objective: &DiffScalar, width: usize) -> Vec<f64> {
    if objective.tangents.is_empty() {
        vec![0.0; width]
    } else {
        objective.tangents.clone()
    }
}
