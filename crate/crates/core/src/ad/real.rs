use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Var;
use crate::math;

/// Scalar arithmetic shared by plain `f64` and scalar tape variables, so the
/// same geometry code runs with or without gradient tracking.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant living in the same context as `self`.
    fn lift(self, c: f64) -> Self;
    /// Current numeric value (used for branch selection only).
    fn real_value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lift(self, c: f64) -> f64 {
        c
    }
    #[inline]
    fn real_value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> f64 {
        math::sin(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        math::cos(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        math::sqrt(self)
    }
    #[inline]
    fn atan2(self, x: f64) -> f64 {
        math::atan2(self, x)
    }
}

impl<'t> Real for Var<'t> {
    fn lift(self, c: f64) -> Self {
        self.tape().scalar(c)
    }
    fn real_value(self) -> f64 {
        self.item()
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn atan2(self, x: Self) -> Self {
        Var::atan2(self, x)
    }
}
