//! Maximal monotone graphs on the real line with everywhere-defined domain.
//!
//! Each graph is the subdifferential of an even convex potential `j` with
//! `j(0) = 0`. The kernel exposes the resolvent `(I + lambda beta)^{-1}`, the
//! Yosida approximation, the Moreau envelope and the convex conjugate.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real, Tolerances};

/// A value in `R ∪ {+inf}`; the infinite case is a flag, never a float infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    PosInf,
}

impl<T: Real> Extended<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInf => None,
        }
    }

    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PosInf,
        }
    }

    pub fn scale(self, s: T) -> Self {
        match self {
            Extended::Finite(a) => Extended::Finite(a * s),
            Extended::PosInf => Extended::PosInf,
        }
    }
}

impl<T: Real> fmt::Display for Extended<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInf => f.write_str("+inf"),
        }
    }
}

/// Closed-form graph families.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind<T> {
    /// `beta(x) = k x`, `k >= 0`.
    Linear { k: T },
    /// `beta(x) = sgn(x) |x|^p`, `j(x) = |x|^{p+1} / (p+1)`, `p > 0`.
    Power { p: T },
    /// `beta = sgn` with the gap at the origin filled by `[-1, 1]`; `j(x) = |x|`.
    Sign,
    /// `beta(x) = c sinh(x)`, `j(x) = c (cosh x - 1)`, `c > 0`.
    Sinh { c: T },
    /// Odd extension of `y -> slope*y + sum_{breaks_i < y} jumps_i` on `y >= 0`,
    /// with every jump filled by a vertical segment.
    Piecewise { slope: T, breaks: Vec<T>, jumps: Vec<T> },
}

/// A maximal monotone graph together with its evaluation tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGraph<T> {
    kind: GraphKind<T>,
    tol: Tolerances<T>,
}

/// One evaluation of the regularized quantities at `(lambda, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEval<T> {
    pub lambda: T,
    pub x: T,
    pub resolvent: T,
    pub yosida: T,
    pub moreau: T,
}

impl<T: Real> MonotoneGraph<T> {
    pub fn new(kind: GraphKind<T>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match &kind {
            GraphKind::Linear { k } if !(k.is_finite() && *k >= T::zero()) => {
                return bad("linear gain k must be finite and >= 0")
            }
            GraphKind::Power { p } if !(p.is_finite() && *p > T::zero()) => {
                return bad("power exponent p must be finite and > 0")
            }
            GraphKind::Sinh { c } if !(c.is_finite() && *c > T::zero()) => {
                return bad("sinh scale c must be finite and > 0")
            }
            GraphKind::Piecewise { slope, breaks, jumps } => {
                if !(slope.is_finite() && *slope > T::zero()) {
                    return bad("piecewise slope must be finite and > 0");
                }
                if breaks.len() != jumps.len() {
                    return bad("piecewise breaks and jumps must have equal length");
                }
                if breaks.iter().any(|b| !b.is_finite() || *b < T::zero()) || breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("piecewise breaks must be finite, >= 0 and strictly increasing");
                }
                if jumps.iter().any(|j| !j.is_finite() || *j < T::zero()) {
                    return bad("piecewise jumps must be finite and >= 0");
                }
            }
            _ => {}
        }
        Ok(Self { kind, tol: Tolerances::default() })
    }

    pub fn linear(k: T) -> Result<Self> {
        Self::new(GraphKind::Linear { k })
    }

    pub fn power(p: T) -> Result<Self> {
        Self::new(GraphKind::Power { p })
    }

    pub fn sign() -> Self {
        Self { kind: GraphKind::Sign, tol: Tolerances::default() }
    }

    pub fn sinh(c: T) -> Result<Self> {
        Self::new(GraphKind::Sinh { c })
    }

    pub fn piecewise(slope: T, breaks: Vec<T>, jumps: Vec<T>) -> Result<Self> {
        Self::new(GraphKind::Piecewise { slope, breaks, jumps })
    }

    /// The default catalogue: one representative per family.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::linear(T::one()).expect("valid"),
            Self::power(lit(3.0)).expect("valid"),
            Self::sign(),
            Self::sinh(T::one()).expect("valid"),
            Self::piecewise(T::one(), vec![lit(0.5), lit(1.5)], vec![T::one(), lit(0.5)]).expect("valid"),
        ]
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &GraphKind<T> {
        &self.kind
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            GraphKind::Linear { .. } => "linear",
            GraphKind::Power { .. } => "power",
            GraphKind::Sign => "sign",
            GraphKind::Sinh { .. } => "sinh",
            GraphKind::Piecewise { .. } => "piecewise",
        }
    }

    /// True when `beta` is the zero graph.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, GraphKind::Linear { k } if k == T::zero())
    }

    /// Potential `j(x)`.
    pub fn j(&self, x: T) -> T {
        let a = x.abs();
        match &self.kind {
            GraphKind::Linear { k } => *k * x * x * lit(0.5),
            GraphKind::Power { p } => a.powf(*p + T::one()) / (*p + T::one()),
            GraphKind::Sign => a,
            GraphKind::Sinh { c } => {
                // cosh(a) - 1 = 2 sinh^2(a/2), exact near 0
                let s = (a * lit(0.5)).sinh();
                *c * lit(2.0) * s * s
            }
            GraphKind::Piecewise { slope, breaks, jumps } => {
                let mut v = *slope * a * a * lit(0.5);
                for (&b, &jv) in breaks.iter().zip(jumps) {
                    if a > b {
                        v = v + jv * (a - b);
                    }
                }
                v
            }
        }
    }

    /// The closed interval `beta(x) = [lo, hi]`.
    pub fn selection_interval(&self, x: T) -> (T, T) {
        let s = if x < T::zero() { -T::one() } else { T::one() };
        let a = x.abs();
        let (lo, hi) = match &self.kind {
            GraphKind::Linear { k } => (*k * a, *k * a),
            GraphKind::Power { p } => {
                let v = a.powf(*p);
                (v, v)
            }
            GraphKind::Sign => {
                if a == T::zero() {
                    return (-T::one(), T::one());
                }
                (T::one(), T::one())
            }
            GraphKind::Sinh { c } => {
                let v = *c * a.sinh();
                (v, v)
            }
            GraphKind::Piecewise { slope, breaks, jumps } => {
                let mut below = *slope * a;
                let mut at = T::zero();
                for (&b, &jv) in breaks.iter().zip(jumps) {
                    if a > b {
                        below = below + jv;
                    } else if a == b {
                        at = jv;
                    }
                }
                if a == T::zero() {
                    return (-at, at);
                }
                (below, below + at)
            }
        };
        if s < T::zero() {
            (-hi, -lo)
        } else {
            (lo, hi)
        }
    }

    /// Minimal-norm element of `beta(x)`.
    pub fn beta_min(&self, x: T) -> T {
        let (lo, hi) = self.selection_interval(x);
        if lo <= T::zero() && hi >= T::zero() {
            T::zero()
        } else if lo > T::zero() {
            lo
        } else {
            hi
        }
    }

    /// Whether `y ∈ beta(x)` up to a relative tolerance.
    pub fn contains(&self, x: T, y: T, tol: T) -> bool {
        let (lo, hi) = self.selection_interval(x);
        y >= lo - tol * (T::one() + lo.abs()) && y <= hi + tol * (T::one() + hi.abs())
    }

    /// Resolvent `(I + lambda beta)^{-1} x`.
    pub fn resolvent(&self, lambda: T, x: T) -> Result<T> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be finite and > 0".into()));
        }
        if !x.is_finite() {
            return Err(Error::InvalidParameter("resolvent input must be finite".into()));
        }
        let s = if x < T::zero() { -T::one() } else { T::one() };
        let a = x.abs();
        if a == T::zero() {
            return Ok(T::zero());
        }
        let y = match &self.kind {
            GraphKind::Linear { k } => a / (T::one() + lambda * *k),
            GraphKind::Sign => (a - lambda).max(T::zero()),
            GraphKind::Power { p } => {
                let p = *p;
                let hi = a.min((a / lambda).powf(p.recip()));
                safeguarded_newton(
                    |y| (y + lambda * y.powf(p) - a, T::one() + lambda * p * y.powf(p - T::one())),
                    T::zero(),
                    hi,
                    self.tol.root,
                    "power",
                    x,
                )?
            }
            GraphKind::Sinh { c } => {
                let c = *c;
                let hi = a.min((a / (lambda * c)).asinh());
                safeguarded_newton(
                    |y| (y + lambda * c * y.sinh() - a, T::one() + lambda * c * y.cosh()),
                    T::zero(),
                    hi,
                    self.tol.root,
                    "sinh",
                    x,
                )?
            }
            GraphKind::Piecewise { slope, breaks, jumps } => {
                let denom = T::one() + lambda * *slope;
                let mut cum = T::zero();
                let mut out = None;
                for (&b, &jv) in breaks.iter().zip(jumps) {
                    let left = b + lambda * (*slope * b + cum);
                    if a <= left {
                        out = Some(((a - lambda * cum) / denom).min(b));
                        break;
                    }
                    cum = cum + jv;
                    let right = b + lambda * (*slope * b + cum);
                    if a <= right {
                        out = Some(b);
                        break;
                    }
                }
                out.unwrap_or_else(|| ((a - lambda * cum) / denom).max(T::zero()))
            }
        };
        Ok(s * y)
    }

    /// Yosida approximation `(x - resolvent) / lambda`.
    pub fn yosida(&self, lambda: T, x: T) -> Result<T> {
        if let GraphKind::Sign = self.kind {
            self.resolvent(lambda, x)?;
            return Ok((x / lambda).max(-T::one()).min(T::one()));
        }
        Ok((x - self.resolvent(lambda, x)?) / lambda)
    }

    /// Moreau envelope `j_lambda(x) = j(R x) + lambda |beta_lambda(x)|^2 / 2`.
    pub fn moreau(&self, lambda: T, x: T) -> Result<T> {
        let e = self.eval(lambda, x)?;
        Ok(e.moreau)
    }

    pub fn eval(&self, lambda: T, x: T) -> Result<GraphEval<T>> {
        let r = self.resolvent(lambda, x)?;
        let y =
            if let GraphKind::Sign = self.kind { (x / lambda).max(-T::one()).min(T::one()) } else { (x - r) / lambda };
        let moreau = self.j(r) + lambda * y * y * lit(0.5);
        Ok(GraphEval { lambda, x, resolvent: r, yosida: y, moreau })
    }

    /// Derivative of `beta_lambda` at `x` (a generalized derivative at kinks).
    pub fn yosida_derivative(&self, lambda: T, x: T) -> Result<T> {
        let r = self.resolvent(lambda, x)?;
        let inv = lambda.recip();
        Ok(match self.beta_derivative(r, x, lambda) {
            None => inv,
            Some(d) => d / (T::one() + lambda * d),
        })
    }

    /// Derivative of the resolvent at `x`; zero inside a filled gap.
    pub fn resolvent_derivative(&self, lambda: T, x: T) -> Result<T> {
        let r = self.resolvent(lambda, x)?;
        Ok(match self.beta_derivative(r, x, lambda) {
            None => T::zero(),
            Some(d) => (T::one() + lambda * d).recip(),
        })
    }

    /// `beta'(r)`, or `None` when `(x - r)/lambda` lies strictly inside a vertical segment at `r`.
    fn beta_derivative(&self, r: T, x: T, lambda: T) -> Option<T> {
        let a = r.abs();
        match &self.kind {
            GraphKind::Linear { k } => Some(*k),
            GraphKind::Power { p } => {
                if a == T::zero() && *p < T::one() {
                    None
                } else if a == T::zero() && *p > T::one() {
                    Some(T::zero())
                } else {
                    Some(*p * a.powf(*p - T::one()))
                }
            }
            GraphKind::Sign => {
                if x.abs() < lambda {
                    None
                } else {
                    Some(T::zero())
                }
            }
            GraphKind::Sinh { c } => Some(*c * a.cosh()),
            GraphKind::Piecewise { slope, .. } => {
                let (lo, hi) = self.selection_interval(r);
                let y = (x - r) / lambda;
                if hi > lo && y > lo && y < hi {
                    None
                } else {
                    Some(*slope)
                }
            }
        }
    }

    /// Convex conjugate `j*(r) = sup_y (r y - j(y))`.
    pub fn conjugate(&self, r: T) -> Extended<T> {
        let a = r.abs();
        match &self.kind {
            GraphKind::Linear { k } => {
                if *k == T::zero() {
                    if a == T::zero() {
                        Extended::Finite(T::zero())
                    } else {
                        Extended::PosInf
                    }
                } else {
                    Extended::Finite(a * a / (lit::<T>(2.0) * *k))
                }
            }
            GraphKind::Power { p } => {
                let q = (*p + T::one()) / *p;
                Extended::Finite(*p / (*p + T::one()) * a.powf(q))
            }
            GraphKind::Sign => {
                if a <= T::one() + self.tol.identity {
                    Extended::Finite(T::zero())
                } else {
                    Extended::PosInf
                }
            }
            GraphKind::Sinh { c } => {
                let u = a / *c;
                // sqrt(1+u^2) - 1 written without cancellation
                let s = u * u / ((T::one() + u * u).sqrt() + T::one());
                Extended::Finite(a * u.asinh() - *c * s)
            }
            GraphKind::Piecewise { slope, breaks, .. } => {
                if a == T::zero() {
                    return Extended::Finite(T::zero());
                }
                let phi = |y: T| a * y - self.j(y);
                let top = lit::<T>(2.0) * a / *slope;
                let mut best = golden_max(&phi, T::zero(), top);
                for &b in breaks.iter().filter(|&&b| b <= top) {
                    best = best.max(phi(b));
                }
                Extended::Finite(best.max(T::zero()))
            }
        }
    }

    /// Young gap `j(y) + j*(r) - r y` (nonnegative, zero iff `r ∈ beta(y)`).
    pub fn young_gap(&self, y: T, r: T) -> Extended<T> {
        match self.conjugate(r) {
            Extended::Finite(c) => Extended::Finite(self.j(y) + c - r * y),
            Extended::PosInf => Extended::PosInf,
        }
    }

    /// Returns `(gap, slack)` with `gap = j(Rx) + j*(beta_lambda x) - beta_lambda(x) Rx`
    /// and `slack = beta_lambda(x) x - beta_lambda(x) Rx`.
    pub fn duality_gap_at_resolvent(&self, lambda: T, x: T) -> Result<(T, T)> {
        let e = self.eval(lambda, x)?;
        let conj = self
            .conjugate(e.yosida)
            .finite()
            .ok_or_else(|| Error::InvalidParameter(format!("conjugate infinite at yosida value {}", e.yosida)))?;
        let gap = self.j(e.resolvent) + conj - e.yosida * e.resolvent;
        let slack = e.yosida * (x - e.resolvent);
        Ok((gap, slack))
    }
}

/// Safeguarded Newton for an increasing function with a sign change on `[lo, hi]`.
fn safeguarded_newton<T: Real>(
    f: impl Fn(T) -> (T, T),
    mut lo: T,
    mut hi: T,
    tol: T,
    family: &'static str,
    x: T,
) -> Result<T> {
    let tiny = T::min_positive_value();
    let mut y = hi;
    for _ in 0..300 {
        let (fy, dfy) = f(y);
        if fy == T::zero() {
            return Ok(y);
        }
        if fy > T::zero() {
            hi = y;
        } else {
            lo = y;
        }
        let newton = y - fy / dfy;
        let (next, was_newton) = if newton.is_finite() && newton > lo && newton < hi {
            (newton, true)
        } else {
            ((lo + hi) * lit(0.5), false)
        };
        let scale = next.abs().max(tiny);
        if was_newton && (next - y).abs() <= tol * scale {
            return Ok(next);
        }
        if hi - lo <= T::epsilon() * lit::<T>(2.0) * hi.abs().max(tiny) {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::RootNotConverged { family, x: x.to_f64().unwrap_or(f64::NAN) })
}

/// Golden-section maximization of a concave function on `[a, b]`.
fn golden_max<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let g = (lit::<T>(5.0).sqrt() - T::one()) * lit(0.5);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let stop = T::epsilon() * lit::<T>(4.0) * b.abs().max(T::one());
    for _ in 0..400 {
        if (b - a).abs() <= stop {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    [f(a), f(b), fc, fd].into_iter().fold(f(T::zero()), T::max)
}
