//! Exact probability that the walk from the origin visits `y` before
//! leaving the Euclidean ball `D(0, R)`.

use crate::error::{Error, Result};
use crate::numerics::linalg::{pcg, SolveStats, StencilMatrix, NO_NEIGHBOR};

use super::Site;

/// Largest ball we enumerate.
const MAX_BALL_SITES: u128 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingSolution {
    pub probability: f64,
    pub ball_sites: usize,
    pub stats: SolveStats,
}

/// Solves `h(y) = 1`, `h = 0` outside `D(0, radius)`, and `h(x)` equal to the
/// average of its neighbours elsewhere in the ball; returns `h(0)`.
pub fn hitting_prob_exact(y: &Site, radius: f64) -> Result<HittingSolution> {
    let d = y.dim();
    if d == 0 || !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid("need a positive radius and a nonempty site"));
    }
    let r2 = radius * radius;
    if y.norm2() == 0 || y.norm2() as f64 > r2 {
        return Err(Error::invalid("target must satisfy 0 < |y| <= R"));
    }
    let r = radius.floor() as i64;
    let side = (2 * r + 1) as usize;
    let cube = (side as u128).pow(d as u32);
    if cube > MAX_BALL_SITES {
        return Err(Error::RegionTooLarge {
            sites: cube,
            limit: MAX_BALL_SITES,
        });
    }
    let cube = cube as usize;
    let to_coords = |mut i: usize| -> Vec<i64> {
        let mut c = vec![0i64; d];
        for k in (0..d).rev() {
            c[k] = (i % side) as i64 - r;
            i /= side;
        }
        c
    };
    let cube_index = |c: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for &x in c {
            if x < -r || x > r {
                return None;
            }
            idx = idx * side + (x + r) as usize;
        }
        Some(idx)
    };
    let y_cube = cube_index(y.coords()).expect("y lies in the ball");

    // unknowns are ball sites other than y
    let mut slot = vec![NO_NEIGHBOR; cube];
    let mut coords = Vec::new();
    for (i, s) in slot.iter_mut().enumerate() {
        let c = to_coords(i);
        let n2: i64 = c.iter().map(|x| x * x).sum();
        if n2 as f64 <= r2 && i != y_cube {
            *s = coords.len() as u32;
            coords.push(c);
        }
    }
    let m = coords.len();
    let width = 2 * d;
    let coupling = -1.0 / width as f64;
    let mut neighbors = vec![NO_NEIGHBOR; m * width];
    let mut rhs = vec![0.0; m];
    let mut c = vec![0i64; d];
    for (row, base) in coords.iter().enumerate() {
        for k in 0..width {
            c.copy_from_slice(base);
            c[k >> 1] += if k & 1 == 0 { 1 } else { -1 };
            match cube_index(&c) {
                Some(j) if j == y_cube => rhs[row] -= coupling,
                Some(j) => neighbors[row * width + k] = slot[j],
                None => {}
            }
        }
    }
    let a = StencilMatrix {
        diag: vec![1.0; m],
        width,
        neighbors,
        coupling,
    };
    let mut h = vec![0.0; m];
    let stats = pcg(&a, &rhs, &mut h, 1e-11, 20 * m + 1000)?;
    let origin = slot[cube_index(&vec![0; d]).expect("origin")];
    Ok(HittingSolution {
        probability: h[origin as usize],
        ball_sites: m + 1,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;
    use rand::Rng;

    #[test]
    fn neighbour_of_origin_is_hit_at_least_by_the_first_step() {
        let h = hitting_prob_exact(&Site::new(&[1, 0, 0]), 15.0).unwrap();
        assert!(h.probability >= 1.0 / 6.0);
        assert!(h.probability < 1.0);
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(hitting_prob_exact(&Site::origin(3), 5.0).is_err());
        assert!(hitting_prob_exact(&Site::new(&[6, 0, 0]), 5.0).is_err());
    }

    #[test]
    fn monotone_in_distance_and_radius() {
        let a = hitting_prob_exact(&Site::new(&[3, 0, 0]), 12.0).unwrap().probability;
        let b = hitting_prob_exact(&Site::new(&[5, 0, 0]), 12.0).unwrap().probability;
        let c = hitting_prob_exact(&Site::new(&[3, 0, 0]), 16.0).unwrap().probability;
        assert!(a > b);
        assert!(c > a);
    }

    #[test]
    fn one_dimensional_gambler_ruin() {
        // in d = 1 the ball is {-R..R} and (x + R + 1)/(y + R + 1) is harmonic
        let r = 7.0;
        let y = 3;
        let h = hitting_prob_exact(&Site::new(&[y]), r).unwrap().probability;
        let exact = (r + 1.0) / (y as f64 + r + 1.0);
        assert!((h - exact).abs() < 1e-9, "{h} vs {exact}");
    }

    #[test]
    fn agrees_with_simulation() {
        let y = Site::new(&[2, 1, 0]);
        let radius = 6.0;
        let h = hitting_prob_exact(&y, radius).unwrap().probability;
        let mut rng = stream_rng(3, 0, 0);
        let n = 40_000;
        let mut hits = 0;
        for _ in 0..n {
            let mut pos = Site::origin(3);
            loop {
                pos.step(rng.random_range(0..6));
                if pos == y {
                    hits += 1;
                    break;
                }
                if pos.norm2() as f64 > radius * radius {
                    break;
                }
            }
        }
        let freq = hits as f64 / n as f64;
        let sd = (h * (1.0 - h) / n as f64).sqrt();
        assert!((freq - h).abs() < 4.0 * sd, "{freq} vs {h}");
    }
}
