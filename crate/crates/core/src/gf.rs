//! Arithmetic in the prime field GF(257).
//!
//! Elements are `u16` values in `0..=256`. A prime field keeps every payload
//! byte representable as a field element while still admitting shares equal
//! to 256, which is why shares are one `u16` per payload byte.

/// The field modulus.
pub const P: u32 = 257;

/// Addition in GF(257).
#[inline]
pub fn add(a: u16, b: u16) -> u16 {
    ((a as u32 + b as u32) % P) as u16
}

/// Subtraction in GF(257).
#[inline]
pub fn sub(a: u16, b: u16) -> u16 {
    ((a as u32 + P - b as u32) % P) as u16
}

/// Multiplication in GF(257).
#[inline]
pub fn mul(a: u16, b: u16) -> u16 {
    ((a as u32 * b as u32) % P) as u16
}

/// Exponentiation by squaring.
pub fn pow(mut base: u16, mut exp: u32) -> u16 {
    let mut acc: u16 = 1;
    base %= P as u16;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse via Fermat's little theorem. Panics on zero.
pub fn inv(a: u16) -> u16 {
    assert!(a % P as u16 != 0, "zero has no inverse in GF(257)");
    pow(a, P - 2)
}

/// Evaluate a polynomial given by `coeffs` (constant term first) at `x`.
pub fn eval_poly(coeffs: &[u16], x: u16) -> u16 {
    let mut acc = 0u16;
    for &c in coeffs.iter().rev() {
        acc = add(mul(acc, x), c);
    }
    acc
}

/// Lagrange interpolation of the polynomial through `points`, evaluated at
/// zero. The x coordinates must be distinct and non-zero.
pub fn interpolate_at_zero(points: &[(u16, u16)]) -> u16 {
    let mut acc = 0u16;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut num = 1u16;
        let mut den = 1u16;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            num = mul(num, xj);
            den = mul(den, sub(xj, xi));
        }
        acc = add(acc, mul(yi, mul(num, inv(den))));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_spot_checks() {
        for a in [0u16, 1, 2, 255, 256] {
            for b in [0u16, 1, 100, 256] {
                assert_eq!(add(a, b), add(b, a));
                assert_eq!(mul(a, b), mul(b, a));
                assert_eq!(sub(add(a, b), b), a);
            }
        }
        for a in 1u16..=256 {
            assert_eq!(mul(a, inv(a)), 1);
        }
    }

    #[test]
    fn eval_and_interpolate_roundtrip() {
        // p(x) = 7 + 3x + 250x^2
        let coeffs = [7u16, 3, 250];
        let points: [(u16, u16); 3] =
            [(1, eval_poly(&coeffs, 1)), (2, eval_poly(&coeffs, 2)), (5, eval_poly(&coeffs, 5))];
        assert_eq!(interpolate_at_zero(&points), 7);
    }
}
