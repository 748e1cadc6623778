//! Lexicographically smallest irreducible moduli `x^N + r(x)`, stored as `r`
//! (bit k = coefficient of x^k). Every entry is re-verified on first use.

const SMALL: [u64; 64] = [
    0x0, 0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x1b,
    0x3, 0x9, 0x5, 0x9, 0x1b, 0x21, 0x3, 0x2b,
    0x9, 0x9, 0x27, 0x9, 0x5, 0x3, 0x21, 0x1b,
    0x9, 0x1b, 0x27, 0x3, 0x5, 0x3, 0x9, 0x8d,
    0x4b, 0x1b, 0x5, 0x35, 0x3f, 0x63, 0x11, 0x39,
    0x9, 0x27, 0x59, 0x21, 0x1b, 0x3, 0x21, 0x2d,
    0x71, 0x1d, 0x4b, 0x9, 0x47, 0x7d, 0x47, 0x95,
    0x11, 0x63, 0x7b, 0x3, 0x27, 0x69, 0x3, 0x1b,
];

const POWERS_OF_TWO: [(usize, u64); 7] = [
    (128, 0x87),
    (256, 0x425),
    (512, 0x125),
    (1024, 0x2cd),
    (2048, 0xbc7),
    (4096, 0xa93),
    (8192, 0x225),
];

pub(super) fn lookup(degree: usize) -> Option<u64> {
    match degree {
        1..=64 => Some(SMALL[degree - 1]),
        _ => POWERS_OF_TWO.iter().find(|(d, _)| *d == degree).map(|&(_, r)| r),
    }
}
