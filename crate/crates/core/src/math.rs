//! Float shims: `std` intrinsics when available, `libm` otherwise.

macro_rules! unary {
    ($($name:ident => $libm:ident),* $(,)?) => {$(
        #[cfg(feature = "std")]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            x.$name()
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    )*};
}

unary! {
    sin => sin,
    cos => cos,
    exp => exp,
    ln => log,
    sqrt => sqrt,
    floor => floor,
    abs => fabs,
    ln_1p => log1p,
    log10 => log10,
    tan => tan,
    tanh => tanh,
}

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    y.atan2(x)
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        exp(x)
    } else {
        ln_1p(exp(x))
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Pairwise summation; the result depends only on the slice order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
