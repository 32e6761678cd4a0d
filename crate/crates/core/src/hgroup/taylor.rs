//! Truncated Taylor (jet) arithmetic in the three chart coordinates.
//!
//! A [`CJet`] stores the Taylor coefficients of a complex field around a
//! point, indexed by monomials `dx^a dy^b dz^c` with `a+b+c ≤ order`.
//! Products, reciprocals, powers and exponentials are computed by series
//! arithmetic, so every retained coefficient is exact up to round-off.
//! Coordinate partial derivatives commute here; the non-commuting frame
//! derivatives are assembled later from these coefficients.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

/// Largest supported truncation order. Nested frame derivatives bump the
/// order by one each; the curvature expressions stay well below this.
pub const MAX_ORDER: usize = 12;

struct Tables {
    /// Monomial exponents in graded order.
    monomials: Vec<[u8; 3]>,
    /// Dense lookup `(a,b,c) -> slot`, dimension `(order+1)^3`.
    lookup: Vec<u32>,
    /// Triples `(i, j, k)` with `monomials[i] + monomials[j] = monomials[k]`.
    products: Vec<(u32, u32, u32)>,
}

impl Tables {
    fn build(order: usize) -> Tables {
        let mut monomials = Vec::new();
        for deg in 0..=order {
            for a in (0..=deg).rev() {
                for b in (0..=(deg - a)).rev() {
                    let c = deg - a - b;
                    monomials.push([a as u8, b as u8, c as u8]);
                }
            }
        }
        let dim = order + 1;
        let mut lookup = vec![u32::MAX; dim * dim * dim];
        for (k, m) in monomials.iter().enumerate() {
            let key = (m[0] as usize * dim + m[1] as usize) * dim + m[2] as usize;
            lookup[key] = k as u32;
        }
        let mut products = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                let sum = [
                    mi[0] as usize + mj[0] as usize,
                    mi[1] as usize + mj[1] as usize,
                    mi[2] as usize + mj[2] as usize,
                ];
                if sum[0] + sum[1] + sum[2] <= order {
                    let key = (sum[0] * dim + sum[1]) * dim + sum[2];
                    products.push((i as u32, j as u32, lookup[key]));
                }
            }
        }
        Tables {
            monomials,
            lookup,
            products,
        }
    }

    fn index(&self, a: usize, b: usize, c: usize, order: usize) -> Option<usize> {
        if a + b + c > order {
            return None;
        }
        let dim = order + 1;
        let slot = self.lookup[(a * dim + b) * dim + c];
        (slot != u32::MAX).then_some(slot as usize)
    }
}

fn tables(order: usize) -> &'static Arc<Tables> {
    static CACHE: OnceLock<Vec<Arc<Tables>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_ORDER).map(|n| Arc::new(Tables::build(n))).collect());
    &cache[order]
}

/// Number of coefficients of a jet of the given order.
fn n_coeffs(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

/// Truncated complex Taylor jet in three variables.
#[derive(Clone, Debug)]
pub struct CJet {
    order: usize,
    c: Vec<Complex64>,
}

impl CJet {
    pub fn constant(val: Complex64, order: usize) -> CJet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds MAX_ORDER");
        let mut c = vec![Complex64::ZERO; n_coeffs(order)];
        c[0] = val;
        CJet { order, c }
    }

    /// Jet of a coordinate function with value `val` at the base point.
    pub fn coordinate(val: f64, axis: usize, order: usize) -> CJet {
        let mut jet = CJet::constant(Complex64::new(val, 0.0), order);
        if order >= 1 {
            let mut m = [0usize; 3];
            m[axis] = 1;
            let slot = tables(order).index(m[0], m[1], m[2], order).unwrap();
            jet.c[slot] = Complex64::ONE;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// Partial derivative `∂x^a ∂y^b ∂z^c f` at the base point.
    /// Returns zero for orders beyond the truncation.
    pub fn partial(&self, a: usize, b: usize, c: usize) -> Complex64 {
        match tables(self.order).index(a, b, c, self.order) {
            Some(slot) => self.c[slot] * factorial(a) * factorial(b) * factorial(c),
            None => Complex64::ZERO,
        }
    }

    pub fn add(&self, rhs: &CJet) -> CJet {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CJet) -> CJet {
        self.zip(rhs, |a, b| a - b)
    }

    fn zip(&self, rhs: &CJet, f: impl Fn(Complex64, Complex64) -> Complex64) -> CJet {
        assert_eq!(self.order, rhs.order);
        CJet {
            order: self.order,
            c: self
                .c
                .iter()
                .zip(&rhs.c)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn neg(&self) -> CJet {
        CJet {
            order: self.order,
            c: self.c.iter().map(|&a| -a).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> CJet {
        CJet {
            order: self.order,
            c: self.c.iter().map(|&a| a * k).collect(),
        }
    }

    pub fn mul(&self, rhs: &CJet) -> CJet {
        assert_eq!(self.order, rhs.order);
        let mut out = vec![Complex64::ZERO; self.c.len()];
        for &(i, j, k) in &tables(self.order).products {
            out[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        CJet {
            order: self.order,
            c: out,
        }
    }

    pub fn conj(&self) -> CJet {
        CJet {
            order: self.order,
            c: self.c.iter().map(|a| a.conj()).collect(),
        }
    }

    /// Substitutes the nilpotent part of `self` into a power series given
    /// by the derivative list `derivs[k] = g^{(k)}(value)`.
    pub fn compose(&self, derivs: &[Complex64]) -> CJet {
        assert!(derivs.len() >= self.order + 1);
        let mut nil = self.clone();
        nil.c[0] = Complex64::ZERO;
        let mut acc = CJet::constant(derivs[0], self.order);
        let mut pw = CJet::constant(Complex64::ONE, self.order);
        let mut fact = 1.0;
        for (k, &d) in derivs.iter().enumerate().take(self.order + 1).skip(1) {
            fact *= k as f64;
            pw = pw.mul(&nil);
            acc = acc.add(&pw.scale(d / fact));
        }
        acc
    }

    /// `1/f`. The caller must have checked `value() != 0`.
    pub fn recip(&self) -> CJet {
        let v = self.value();
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut d = 1.0 / v;
        derivs.push(d);
        for k in 1..=self.order {
            d = d * (-(k as f64)) / v;
            derivs.push(d);
        }
        self.compose(&derivs)
    }

    /// `f^r` for real `r` via the principal branch at the base value.
    pub fn powf(&self, r: f64) -> CJet {
        let v = self.value();
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut coef = Complex64::ONE;
        for k in 0..=self.order {
            let exp = r - k as f64;
            derivs.push(coef * v.powf(exp));
            coef *= Complex64::new(r - k as f64, 0.0);
        }
        self.compose(&derivs)
    }

    /// Integer power by repeated multiplication; exact for polynomials and
    /// well-defined at a vanishing base value when `n ≥ 0`.
    pub fn powi(&self, n: u32) -> CJet {
        let mut acc = CJet::constant(Complex64::ONE, self.order);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn exp(&self) -> CJet {
        let e = self.value().exp();
        let derivs = vec![e; self.order + 1];
        self.compose(&derivs)
    }

    /// Coordinate derivative along `axis`; the result has order one less.
    pub fn deriv(&self, axis: usize) -> CJet {
        assert!(self.order >= 1);
        let out_order = self.order - 1;
        let tin = tables(self.order);
        let tout = tables(out_order);
        let mut out = vec![Complex64::ZERO; n_coeffs(out_order)];
        for (k, m) in tout.monomials.iter().enumerate() {
            let mut up = [m[0] as usize, m[1] as usize, m[2] as usize];
            up[axis] += 1;
            let slot = tin.index(up[0], up[1], up[2], self.order).unwrap();
            out[k] = self.c[slot] * up[axis] as f64;
        }
        CJet {
            order: out_order,
            c: out,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
