//! Coordinate barriers: `−log(x−l)`, `−log(u−x)` and the trigonometric
//! barrier `−log cos(a·x + b)` for two-sided boxes.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Relative distance to a finite bound below which evaluation is refused.
pub const GUARD_REL: f64 = 1e-14;
/// Absolute slack floor keeping the third derivative finite.
pub const GUARD_ABS: f64 = 1e-100;

/// One side of a coordinate's domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Finite(f64),
    /// `−∞` when used as a lower bound, `+∞` when used as an upper bound.
    Infinite,
}

impl Bound {
    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn as_lower(&self) -> f64 {
        match *self {
            Bound::Finite(v) => v,
            Bound::Infinite => f64::NEG_INFINITY,
        }
    }

    pub fn as_upper(&self) -> f64 {
        match *self {
            Bound::Finite(v) => v,
            Bound::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BarrierKind {
    LowerOnly,
    UpperOnly,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barrier1D {
    pub kind: BarrierKind,
    pub l: f64,
    pub u: f64,
    /// `π/(u−l)` for two-sided barriers, zero otherwise.
    pub a: f64,
    /// `−(π/2)(u+l)/(u−l)` for two-sided barriers, zero otherwise.
    pub b_shift: f64,
}

/// Barrier value and its first three derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BarrierDerivs {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn make_barrier(l: Bound, u: Bound) -> Result<Barrier1D> {
    let (lv, uv) = (l.as_lower(), u.as_upper());
    if lv.is_nan() || uv.is_nan() || lv == f64::INFINITY || uv == f64::NEG_INFINITY {
        return Err(Error::DegenerateDomain { l: lv, u: uv });
    }
    match (l, u) {
        (Bound::Infinite, Bound::Infinite) => Err(Error::DegenerateDomain { l: lv, u: uv }),
        (Bound::Finite(_), Bound::Finite(_)) if lv >= uv => {
            Err(Error::DegenerateDomain { l: lv, u: uv })
        }
        (Bound::Finite(_), Bound::Infinite) => Ok(Barrier1D {
            kind: BarrierKind::LowerOnly,
            l: lv,
            u: uv,
            a: 0.0,
            b_shift: 0.0,
        }),
        (Bound::Infinite, Bound::Finite(_)) => Ok(Barrier1D {
            kind: BarrierKind::UpperOnly,
            l: lv,
            u: uv,
            a: 0.0,
            b_shift: 0.0,
        }),
        (Bound::Finite(_), Bound::Finite(_)) => {
            let w = uv - lv;
            if !w.is_finite() {
                return Err(Error::DegenerateDomain { l: lv, u: uv });
            }
            Ok(Barrier1D {
                kind: BarrierKind::TwoSided,
                l: lv,
                u: uv,
                a: PI / w,
                b_shift: -FRAC_PI_2 * (uv + lv) / w,
            })
        }
    }
}

impl Barrier1D {
    /// Distance to the nearer finite bound.
    pub fn slack(&self, x: f64) -> f64 {
        match self.kind {
            BarrierKind::LowerOnly => x - self.l,
            BarrierKind::UpperOnly => self.u - x,
            BarrierKind::TwoSided => (x - self.l).min(self.u - x),
        }
    }

    pub fn is_interior(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let lo_ok = match self.kind {
            BarrierKind::UpperOnly => true,
            _ => slack_ok(x - self.l, self.l),
        };
        let hi_ok = match self.kind {
            BarrierKind::LowerOnly => true,
            _ => slack_ok(self.u - x, self.u),
        };
        lo_ok && hi_ok
    }

    pub fn eval(&self, x: f64) -> Result<BarrierDerivs> {
        if !self.is_interior(x) {
            return Err(Error::OutOfDomain { x, l: self.l, u: self.u });
        }
        Ok(match self.kind {
            BarrierKind::LowerOnly => {
                let s = x - self.l;
                BarrierDerivs {
                    phi: -s.ln(),
                    d1: -1.0 / s,
                    d2: 1.0 / (s * s),
                    d3: -2.0 / (s * s * s),
                }
            }
            BarrierKind::UpperOnly => {
                let s = self.u - x;
                BarrierDerivs {
                    phi: -s.ln(),
                    d1: 1.0 / s,
                    d2: 1.0 / (s * s),
                    d3: 2.0 / (s * s * s),
                }
            }
            BarrierKind::TwoSided => {
                let a = self.a;
                let sl = x - self.l;
                let su = self.u - x;
                let width = self.u - self.l;
                // (sin θ, cos θ) for θ = a·x + b_shift ∈ (−π/2, π/2)
                let (sin_t, cos_t) = if sl.min(su) >= 0.25 * width {
                    let theta = a * (x - 0.5 * (self.u + self.l));
                    theta.sin_cos()
                } else if sl <= su {
                    let (s, c) = (a * sl).sin_cos();
                    (-c, s)
                } else {
                    let (s, c) = (a * su).sin_cos();
                    (c, s)
                };
                let sec = 1.0 / cos_t;
                BarrierDerivs {
                    phi: -cos_t.ln(),
                    d1: a * sin_t * sec,
                    d2: a * a * sec * sec,
                    d3: 2.0 * a * a * a * sin_t * sec * sec * sec,
                }
            }
        })
    }
}

fn slack_ok(s: f64, bound: f64) -> bool {
    s > GUARD_ABS && s > GUARD_REL * bound.abs()
}

/// Evaluate a barrier per coordinate.
pub fn eval_all(bars: &[Barrier1D], x: &[f64]) -> Result<Vec<BarrierDerivs>> {
    bars.iter().zip(x).map(|(b, &xi)| b.eval(xi)).collect()
}
