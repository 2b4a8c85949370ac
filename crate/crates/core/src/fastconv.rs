//! Exact convolution of non-negative big-integer sequences.
//!
//! The fast path packs each sequence into a single huge integer with fixed
//! field width (Kronecker substitution) and lets GMP's large multiplication
//! do the work; fields are sized so that no carry can cross a boundary, which
//! makes unpacking exact. The schoolbook path is kept both as the reference
//! the fast path is tested against and as the cheaper choice for short
//! inputs.

use rug::integer::Order;
use rug::{Complete, Integer};

/// Exact truncated convolution c_m = sum a_i b_{m-i}, m = 0..=n_out, by
/// direct summation. Indices beyond a slice are treated as zero, which is
/// polynomial semantics; truncation soundness is the caller's concern.
pub fn conv_schoolbook(a: &[Integer], b: &[Integer], n_out: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); n_out + 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.cmp0() == std::cmp::Ordering::Equal || i > n_out {
            continue;
        }
        for (j, bj) in b.iter().take(n_out + 1 - i).enumerate() {
            if bj.cmp0() != std::cmp::Ordering::Equal {
                out[i + j] += (ai * bj).complete();
            }
        }
    }
    out
}

/// Exact truncated convolution of non-negative sequences, choosing between
/// the schoolbook and Kronecker paths. Panics on negative input: field
/// packing needs non-negative values, and every sequence this toolkit
/// convolves is non-negative.
pub fn conv(a: &[Integer], b: &[Integer], n_out: usize) -> Vec<Integer> {
    debug_assert!(
        a.iter().chain(b.iter()).all(|x| x.cmp0() != std::cmp::Ordering::Less),
        "convolution inputs must be non-negative"
    );
    // Contributions from indices beyond n_out never reach the output.
    let a = &a[..a.len().min(n_out + 1)];
    let b = &b[..b.len().min(n_out + 1)];
    if a.len().min(b.len()) < 16 {
        conv_schoolbook(a, b, n_out)
    } else {
        conv_kronecker(a, b, n_out)
    }
}

/// Field width in bits for packing: products of entries bounded by
/// 2^ba and 2^bb summed at most `terms` times fit in ba + bb + ceil(log2
/// terms) bits; one extra bit of slack, rounded up to whole 64-bit limbs.
fn field_width_limbs(ba: u32, bb: u32, terms: usize) -> usize {
    let log_terms = usize::BITS - terms.leading_zeros();
    let bits = ba as usize + bb as usize + log_terms as usize + 1;
    bits.div_ceil(64)
}

fn pack(xs: &[Integer], width_limbs: usize) -> Integer {
    let mut buf = vec![0u64; xs.len() * width_limbs];
    for (i, x) in xs.iter().enumerate() {
        let digits = x.to_digits::<u64>(Order::Lsf);
        debug_assert!(digits.len() <= width_limbs);
        buf[i * width_limbs..i * width_limbs + digits.len()].copy_from_slice(&digits);
    }
    Integer::from_digits(&buf, Order::Lsf)
}

fn conv_kronecker(a: &[Integer], b: &[Integer], n_out: usize) -> Vec<Integer> {
    let ba = a.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let bb = b.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    if ba == 0 || bb == 0 {
        return vec![Integer::new(); n_out + 1];
    }
    let wl = field_width_limbs(ba, bb, a.len().min(b.len()));
    let product = pack(a, wl) * pack(b, wl);
    let digits = product.to_digits::<u64>(Order::Lsf);
    (0..=n_out)
        .map(|m| {
            let lo = (m * wl).min(digits.len());
            let hi = ((m + 1) * wl).min(digits.len());
            Integer::from_digits(&digits[lo..hi], Order::Lsf)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[u64]) -> Vec<Integer> {
        xs.iter().map(|&x| Integer::from(x)).collect()
    }

    /// Deterministic pseudo-random integers with a given bit size, from a
    /// 64-bit linear congruential generator (constants from Knuth's MMIX).
    fn lcg_ints(seed: &mut u64, count: usize, bits: u32) -> Vec<Integer> {
        let mut next = || {
            *seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *seed
        };
        (0..count)
            .map(|_| {
                let mut x = Integer::new();
                let mut remaining = bits as i64;
                while remaining > 0 {
                    x <<= 32;
                    x += next() >> 32;
                    remaining -= 32;
                }
                x >> ((-remaining) as u32 % 32)
            })
            .collect()
    }

    #[test]
    fn small_fixed_product() {
        // (1 + 2z + 3z^2)(4 + 5z + 6z^2) = 4 + 13z + 28z^2 + 27z^3 + 18z^4.
        let c = conv(&ints(&[1, 2, 3]), &ints(&[4, 5, 6]), 4);
        assert_eq!(c, ints(&[4, 13, 28, 27, 18]));
        let truncated = conv(&ints(&[1, 2, 3]), &ints(&[4, 5, 6]), 2);
        assert_eq!(truncated, ints(&[4, 13, 28]));
    }

    #[test]
    fn zero_and_empty_inputs() {
        assert_eq!(conv(&ints(&[0, 0]), &ints(&[1, 2]), 3), ints(&[0, 0, 0, 0]));
        assert_eq!(conv(&[], &ints(&[1, 2]), 1), ints(&[0, 0]));
    }

    #[test]
    fn kronecker_matches_schoolbook_across_shapes() {
        let mut seed = 0x3c6ef372fe94f82bu64;
        for &(la, lb, bits) in &[
            (16usize, 16usize, 1u32),
            (40, 17, 64),
            (64, 64, 190),
            (100, 31, 700),
            (257, 256, 63),
        ] {
            let a = lcg_ints(&mut seed, la, bits);
            let b = lcg_ints(&mut seed, lb, bits);
            for &n_out in &[0usize, 1, la / 2, la + lb - 2, la + lb + 3] {
                let fast = conv_kronecker(&a, &b, n_out);
                let slow = conv_schoolbook(&a, &b, n_out);
                assert_eq!(fast, slow, "la={la} lb={lb} bits={bits} n_out={n_out}");
            }
        }
    }

    #[test]
    fn geometric_power_columns() {
        // Convolving all-ones with itself repeatedly gives binomial columns:
        // after k convolutions, entry n is C(n+k, k).
        let ones = ints(&[1; 64]);
        let mut row = ones.clone();
        for k in 2..=5u64 {
            row = conv(&row, &ones, 63);
            for (n, v) in row.iter().enumerate() {
                let expect = crate::rat::binomial(n as u64 + k - 1, k - 1);
                assert_eq!(crate::rat::rug_to_int(v), expect, "k={k} n={n}");
            }
        }
    }
}
