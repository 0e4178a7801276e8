//! Neighbour search for pairs within the interaction range.

use std::collections::HashMap;

use crate::model::ParticleSystem;

/// Minimal-image displacement `a - b` on the periodic box.
#[inline]
pub fn min_image(a: &[f64], b: &[f64], side: f64, out: &mut [f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..a.len() {
        let mut d = a[k] - b[k];
        d -= side * (d / side).round();
        out[k] = d;
        r2 += d * d;
    }
    r2
}

/// Alive particles bucketed by cell; every alive slot is in exactly one cell.
#[derive(Debug, Clone)]
pub struct CellGrid {
    per_axis: usize,
    side: f64,
    box_side: f64,
    cells: HashMap<u64, Vec<usize>>,
}

impl CellGrid {
    /// Cells of side at least `min_side`. None when fewer than three cells
    /// fit per axis, in which case neighbour cells would alias.
    pub fn build(state: &ParticleSystem, min_side: f64) -> Option<Self> {
        let box_side = state.box_side();
        let per_axis = (box_side / min_side).floor() as usize;
        if per_axis < 3 {
            return None;
        }
        let side = box_side / per_axis as f64;
        let mut cells: HashMap<u64, Vec<usize>> = HashMap::new();
        for s in state.alive_slots() {
            cells.entry(Self::key_of(state.position(s), side, per_axis)).or_default().push(s);
        }
        Some(Self { per_axis, side, box_side, cells })
    }

    fn key_of(x: &[f64], side: f64, per_axis: usize) -> u64 {
        x.iter().fold(0u64, |acc, &v| {
            let c = ((v / side) as usize).min(per_axis - 1);
            acc * per_axis as u64 + c as u64
        })
    }

    pub fn cell_side(&self) -> f64 {
        self.side
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    /// Pairs of alive slots `(i, j)`, `i < j`, at distance below `radius`,
    /// sorted.
    pub fn pairs_within(&self, state: &ParticleSystem, radius: f64) -> Vec<(usize, usize)> {
        let dim = state.dim();
        let n = self.per_axis as i64;
        let mut pairs = Vec::new();
        let mut disp = vec![0.0; dim];
        let mut coord = vec![0i64; dim];
        let neighbours = 3usize.pow(dim as u32);
        let r2max = radius * radius;
        for (&key, members) in &self.cells {
            let mut k = key;
            for a in (0..dim).rev() {
                coord[a] = (k % self.per_axis as u64) as i64;
                k /= self.per_axis as u64;
            }
            for nb in 0..neighbours {
                let mut rem = nb;
                let mut other = 0u64;
                for &c in coord.iter() {
                    let off = (rem % 3) as i64 - 1;
                    rem /= 3;
                    other = other * n as u64 + (c + off).rem_euclid(n) as u64;
                }
                if other < key {
                    continue;
                }
                let Some(others) = self.cells.get(&other) else { continue };
                for &i in members {
                    for &j in others {
                        if other == key && j <= i {
                            continue;
                        }
                        let r2 = min_image(state.position(i), state.position(j), self.box_side, &mut disp);
                        if r2 < r2max {
                            pairs.push((i.min(j), i.max(j)));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

/// All pairs within `radius` by direct enumeration.
pub fn brute_force_pairs(state: &ParticleSystem, radius: f64) -> Vec<(usize, usize)> {
    let alive: Vec<usize> = state.alive_slots().collect();
    let mut disp = vec![0.0; state.dim()];
    let mut pairs = Vec::new();
    for (a, &i) in alive.iter().enumerate() {
        for &j in &alive[a + 1..] {
            if min_image(state.position(i), state.position(j), state.box_side(), &mut disp) < radius * radius {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Pairs within `radius`, through the cell list when it applies.
pub fn pairs_within(state: &ParticleSystem, cell_side: f64, radius: f64) -> Vec<(usize, usize)> {
    match CellGrid::build(state, cell_side) {
        Some(grid) => grid.pairs_within(state, radius),
        None => brute_force_pairs(state, radius),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_state(n: usize, seed: u64) -> ParticleSystem {
        let mut rng = CounterRng::new(seed, 0, 0);
        let positions = (0..3 * n).map(|_| rng.uniform()).collect();
        ParticleSystem::from_particles(3, 1.0, 0.01, seed, positions, vec![1.0; n]).unwrap()
    }

    #[test]
    fn cell_list_matches_brute_force() {
        for seed in 0..50 {
            let state = random_state(2000, seed);
            let radius = 0.05;
            let grid = CellGrid::build(&state, radius).unwrap();
            assert_eq!(grid.pairs_within(&state, radius), brute_force_pairs(&state, radius), "seed {seed}");
        }
    }

    #[test]
    fn pairs_across_the_periodic_boundary() {
        let state = ParticleSystem::from_particles(2, 1.0, 0.01, 0, vec![0.01, 0.5, 0.99, 0.5], vec![1.0, 1.0]).unwrap();
        assert_eq!(pairs_within(&state, 0.1, 0.05), vec![(0, 1)]);
        assert_eq!(brute_force_pairs(&state, 0.05), vec![(0, 1)]);
    }
}
