//! Bit-exact lattice value noise and Voronoi distance.
//!
//! Lattice hash, with all arithmetic wrapping on `u64`:
//!
//! ```text
//! h(xi, yi, s) = splitmix64_finalize(xi * 0x9E3779B97F4A7C15
//!                                    ^ yi * 0xC2B2AE3D27D4EB4F
//!                                    ^ s  * 0x165667B19E3779F9)
//! lattice(xi, yi, s) = (h >> 11) / 2^53
//! ```
//!
//! `xi`, `yi` are `floor` of the coordinate as a two's-complement `i64`
//! reinterpreted as `u64`. Interpolation is bilinear with the quintic fade
//! `f(t) = t*t*t*(t*(t*6 - 15) + 10)` applied to both fractional offsets:
//!
//! ```text
//! a = v00 + (v10 - v00) * fx
//! b = v01 + (v11 - v01) * fx
//! n = a + (b - a) * fy
//! ```

use crate::rng::{splitmix64_finalize, unit_f64};

const KX: u64 = 0x9E37_79B9_7F4A_7C15;
const KY: u64 = 0xC2B2_AE3D_27D4_EB4F;
const KS: u64 = 0x1656_67B1_9E37_79F9;

/// Offset applied to the seed for the second (y) Voronoi jitter channel.
pub const VORONOI_Y_SALT: u64 = 0x632B_E59B_D9B4_E019;

/// Largest `f64` strictly below 1.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
pub fn lattice_hash(xi: u64, yi: u64, s: u64) -> u64 {
    splitmix64_finalize(xi.wrapping_mul(KX) ^ yi.wrapping_mul(KY) ^ s.wrapping_mul(KS))
}

#[inline]
pub fn lattice_value(xi: i64, yi: i64, s: u64) -> f64 {
    unit_f64(lattice_hash(xi as u64, yi as u64, s))
}

#[inline]
pub fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Value noise at `(x, y)`; result lies in `[0, 1)`. Inputs must be finite.
pub fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = fade(x - x0);
    let fy = fade(y - y0);
    let xi = x0 as i64;
    let yi = y0 as i64;
    let v00 = lattice_value(xi, yi, seed);
    let v10 = lattice_value(xi.wrapping_add(1), yi, seed);
    let v01 = lattice_value(xi, yi.wrapping_add(1), seed);
    let v11 = lattice_value(xi.wrapping_add(1), yi.wrapping_add(1), seed);
    let a = v00 + (v10 - v00) * fx;
    let b = v01 + (v11 - v01) * fx;
    (a + (b - a) * fy).min(BELOW_ONE)
}

/// Distance to the nearest jittered feature point among the 3x3 surrounding
/// cells. `randomness` in `[0, 1]` scales the jitter; 0 gives a regular grid
/// of cell centers. Result is clamped to `[0, 1)`.
pub fn voronoi(x: f64, y: f64, seed: u64, randomness: f64) -> f64 {
    let r = randomness.clamp(0.0, 1.0);
    let cx = x.floor() as i64;
    let cy = y.floor() as i64;
    let seed_y = seed.wrapping_add(VORONOI_Y_SALT);
    let mut best = f64::INFINITY;
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            let nx = cx.wrapping_add(dx);
            let ny = cy.wrapping_add(dy);
            let jx = lattice_value(nx, ny, seed);
            let jy = lattice_value(nx, ny, seed_y);
            let fx = nx as f64 + 0.5 + (jx - 0.5) * r;
            let fy = ny as f64 + 0.5 + (jy - 0.5) * r;
            let d = ((fx - x) * (fx - x) + (fy - y) * (fy - y)).sqrt();
            if d < best {
                best = d;
            }
        }
    }
    best.min(BELOW_ONE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fade_endpoints() {
        assert_eq!(fade(0.0), 0.0);
        assert_eq!(fade(1.0), 1.0);
        assert_eq!(fade(0.5), 0.5);
    }

    #[test]
    fn lattice_points_return_corner_values() {
        let expected = unit_f64(lattice_hash(3, 5, 9));
        assert_eq!(value_noise(3.0, 5.0, 9).to_bits(), expected.to_bits());
        let neg = lattice_value(-2, -7, 1);
        assert_eq!(value_noise(-2.0, -7.0, 1).to_bits(), neg.to_bits());
    }

    #[test]
    fn deterministic() {
        let a = value_noise(0.37, 12.9, 77);
        let b = value_noise(0.37, 12.9, 77);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn ranges() {
        for i in 0..500 {
            let x = i as f64 * 0.173 - 40.0;
            let y = i as f64 * 0.311 - 20.0;
            let n = value_noise(x, y, i);
            assert!((0.0..1.0).contains(&n));
            let v = voronoi(x, y, i, 1.0);
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn regular_voronoi_is_distance_to_cell_center() {
        let d = voronoi(2.5, 3.5, 0, 0.0);
        assert_eq!(d, 0.0);
        let d = voronoi(2.0, 3.5, 0, 0.0);
        assert!((d - 0.5).abs() < 1e-12);
    }
}
