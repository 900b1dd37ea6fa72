//! Pseudorandom spatial hashing used by the non-stationary intensity and
//! interaction functions.

/// The 32-bit MurmurHash3 finalizer (`fmix32`).
pub fn murmur_mix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    h = h.wrapping_mul(0xC2B2_AE35);
    h ^= h >> 16;
    h
}

fn unit_hash(n: i64) -> f64 {
    // negative lattice points wrap via two's complement
    murmur_mix32(n as u32) as f64 / u32::MAX as f64
}

/// Piecewise-linear interpolation of the normalized hash between the
/// integers bracketing `t`. Always in `[0, 1]`.
pub fn hash_interp(t: f64) -> f64 {
    let floor = t.floor();
    let w = t - floor;
    let n = floor as i64;
    let lo = unit_hash(n);
    if w == 0.0 {
        return lo;
    }
    (1.0 - w) * lo + w * unit_hash(n.wrapping_add(1))
}
