//! Structured grid indexing, neighbor resolution and one-cell halo storage.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// What lies beyond one end of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Periodic,
    Wall,
    Open,
}

/// Node `n = x + nx * (y + ny * z)`; `x` is fastest.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    ends: [[EdgeKind; 2]; 3],
    // neighbors[axis][3 * c + (d + 1)]: resolved coordinate of c + d, or -1 outside.
    neighbors: [Vec<i32>; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], ends: [[EdgeKind; 2]; 3]) -> Result<Self> {
        for axis in 0..3 {
            if dims[axis] == 0 {
                return Err(Error::Config(format!("grid extent along axis {axis} is zero")));
            }
            let [lo, hi] = ends[axis];
            if (lo == EdgeKind::Periodic) != (hi == EdgeKind::Periodic) {
                return Err(Error::Config(format!("periodic faces along axis {axis} must be paired")));
            }
            if lo != EdgeKind::Periodic && dims[axis] < 3 {
                return Err(Error::Config(format!(
                    "axis {axis} with non-periodic faces needs at least 3 nodes"
                )));
            }
        }
        let neighbors = std::array::from_fn(|axis| {
            let n = dims[axis] as i32;
            let periodic = ends[axis][0] == EdgeKind::Periodic;
            let mut table = Vec::with_capacity(3 * dims[axis]);
            for c in 0..n {
                for d in -1..=1 {
                    let t = c + d;
                    let resolved = if (0..n).contains(&t) {
                        t
                    } else if periodic {
                        t.rem_euclid(n)
                    } else {
                        -1
                    };
                    table.push(resolved);
                }
            }
            table
        });
        Ok(Self {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            ends,
            neighbors,
        })
    }

    /// Fully periodic box.
    pub fn periodic(dims: [usize; 3]) -> Self {
        Self::new(dims, [[EdgeKind::Periodic; 2]; 3]).expect("periodic grid is always valid")
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self, axis: usize, side: usize) -> EdgeKind {
        self.ends[axis][side]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.ends[axis][0] == EdgeKind::Periodic
    }

    #[inline(always)]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, n: usize) -> [usize; 3] {
        [n % self.nx, (n / self.nx) % self.ny, n / (self.nx * self.ny)]
    }

    /// Coordinate reached from `c` by a step `d ∈ {-1, 0, 1}` along `axis`, or `None`
    /// when the step leaves through a non-periodic face.
    #[inline(always)]
    pub fn step(&self, axis: usize, c: usize, d: i32) -> Option<usize> {
        let v = self.neighbors[axis][3 * c + (d + 1) as usize];
        (v >= 0).then_some(v as usize)
    }

    /// Node reached from `(x, y, z)` by the lattice vector `c`.
    #[inline]
    pub fn neighbor(&self, xyz: [usize; 3], c: [i32; 3]) -> Option<usize> {
        let x = self.step(0, xyz[0], c[0])?;
        let y = self.step(1, xyz[1], c[1])?;
        let z = self.step(2, xyz[2], c[2])?;
        Some(self.index(x, y, z))
    }

    /// Edge kind crossed when stepping from `xyz` by `c`, if the step leaves the grid.
    /// Walls take precedence over open faces at edges and corners.
    pub fn crossing(&self, xyz: [usize; 3], c: [i32; 3]) -> Option<EdgeKind> {
        let mut hit = None;
        for axis in 0..3 {
            if c[axis] == 0 || self.step(axis, xyz[axis], c[axis]).is_some() {
                continue;
            }
            let side = usize::from(c[axis] > 0);
            match self.ends[axis][side] {
                EdgeKind::Wall => return Some(EdgeKind::Wall),
                kind => hit = Some(kind),
            }
        }
        hit
    }

    /// Whether the node sits on a wall face.
    pub fn on_wall(&self, xyz: [usize; 3]) -> bool {
        let dims = self.dims();
        (0..3).any(|axis| {
            (xyz[axis] == 0 && self.ends[axis][0] == EdgeKind::Wall)
                || (xyz[axis] == dims[axis] - 1 && self.ends[axis][1] == EdgeKind::Wall)
        })
    }

    /// Dimensions of the halo-padded arrays.
    pub fn padded_dims(&self) -> [usize; 3] {
        [self.nx + 2, self.ny + 2, self.nz + 2]
    }

    pub fn padded_len(&self) -> usize {
        (self.nx + 2) * (self.ny + 2) * (self.nz + 2)
    }

    /// Padded index of a node given by signed coordinates in `-1..=n`.
    #[inline(always)]
    pub fn padded_index(&self, x: isize, y: isize, z: isize) -> usize {
        let px = self.nx + 2;
        let py = self.ny + 2;
        (x + 1) as usize + px * ((y + 1) as usize + py * (z + 1) as usize)
    }

    /// Padded-array offset of a lattice vector.
    #[inline]
    pub fn padded_offset(&self, c: [i32; 3]) -> isize {
        let px = (self.nx + 2) as isize;
        let py = (self.ny + 2) as isize;
        c[0] as isize + px * (c[1] as isize + py * c[2] as isize)
    }

    /// Coordinate on `axis` mapped back into the grid: wrapped when periodic, clamped otherwise.
    #[inline]
    pub fn resolve(&self, axis: usize, c: isize) -> usize {
        let n = self.dims()[axis] as isize;
        if (0..n).contains(&c) {
            c as usize
        } else if self.is_periodic(axis) {
            c.rem_euclid(n) as usize
        } else {
            c.clamp(0, n - 1) as usize
        }
    }
}

/// Scalar field with a one-node halo on every face.
#[derive(Debug, Clone)]
pub struct Padded<T> {
    pub data: Vec<T>,
}

impl<T: Copy + Default> Padded<T> {
    pub fn new(grid: &Grid) -> Self {
        Self {
            data: vec![T::default(); grid.padded_len()],
        }
    }

    #[inline(always)]
    pub fn at(&self, grid: &Grid, x: isize, y: isize, z: isize) -> T {
        self.data[grid.padded_index(x, y, z)]
    }

    #[inline(always)]
    pub fn set(&mut self, grid: &Grid, x: isize, y: isize, z: isize, v: T) {
        let i = grid.padded_index(x, y, z);
        self.data[i] = v;
    }

    /// Copy an unpadded field into the interior.
    pub fn load_interior(&mut self, grid: &Grid, src: &[T]) {
        let [nx, ny, nz] = grid.dims();
        for z in 0..nz {
            for y in 0..ny {
                let row = grid.index(0, y, z);
                let prow = grid.padded_index(0, y as isize, z as isize);
                self.data[prow..prow + nx].copy_from_slice(&src[row..row + nx]);
            }
        }
    }
}

/// How a halo layer beyond one face is populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HaloRule {
    /// Copy the opposite interior layer.
    Periodic,
    /// Copy the adjacent interior layer.
    ZeroGradient,
    /// Fixed value.
    Constant(f64),
    /// Geometric wetting ghost layer for the given contact angle (radians).
    Wetting(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HaloOp {
    Copy { dst: usize, src: usize },
    Constant { dst: usize, value: f64 },
    Wetting { dst: usize, g1: [usize; 2], g2: [usize; 2], mirror: usize, theta: f64 },
}

/// Precomputed halo fill for one grid and rule set. Axes are processed x, then y, then z;
/// each later axis covers the already-filled halo of earlier axes, so edges and corners
/// take the rule of the last axis that touches them.
#[derive(Debug, Clone)]
pub struct HaloPlan {
    ops: Vec<HaloOp>,
}

impl HaloPlan {
    pub fn new(grid: &Grid, rules: &[[HaloRule; 2]; 3]) -> Self {
        let dims = grid.dims().map(|d| d as isize);
        let idx = |c: [isize; 3]| grid.padded_index(c[0], c[1], c[2]);
        let mut ops = Vec::new();
        for axis in 0..3 {
            let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
            let range = |other: usize| -> std::ops::Range<isize> {
                if other < axis {
                    -1..dims[other] + 1
                } else {
                    0..dims[other]
                }
            };
            for side in 0..2 {
                let ghost = if side == 0 { -1 } else { dims[axis] };
                let inner = if side == 0 { 0 } else { dims[axis] - 1 };
                let second = if side == 0 { 1 } else { dims[axis] - 2 };
                let rule = rules[axis][side];
                for p in range(a1) {
                    for q in range(a2) {
                        let mut at = [0isize; 3];
                        at[a1] = p;
                        at[a2] = q;
                        at[axis] = ghost;
                        let dst = idx(at);
                        let op = match rule {
                            HaloRule::Periodic => {
                                at[axis] = if side == 0 { dims[axis] - 1 } else { 0 };
                                HaloOp::Copy { dst, src: idx(at) }
                            }
                            HaloRule::ZeroGradient => {
                                at[axis] = inner;
                                HaloOp::Copy { dst, src: idx(at) }
                            }
                            HaloRule::Constant(value) => HaloOp::Constant { dst, value },
                            HaloRule::Wetting(theta) => {
                                let mut r = [0isize; 3];
                                r[a1] = grid.resolve(a1, p) as isize;
                                r[a2] = grid.resolve(a2, q) as isize;
                                let layer = |d: isize, off1: isize, off2: isize| {
                                    let mut c = r;
                                    c[axis] = d;
                                    c[a1] = grid.resolve(a1, c[a1] + off1) as isize;
                                    c[a2] = grid.resolve(a2, c[a2] + off2) as isize;
                                    idx(c)
                                };
                                HaloOp::Wetting {
                                    dst,
                                    g1: [layer(inner, 1, 0), layer(inner, -1, 0)],
                                    g2: [layer(inner, 0, 1), layer(inner, 0, -1)],
                                    mirror: if dims[axis] > 1 { layer(second, 0, 0) } else { layer(inner, 0, 0) },
                                    theta,
                                }
                            }
                        };
                        ops.push(op);
                    }
                }
            }
        }
        Self { ops }
    }

    pub fn fill_scalar(&self, field: &mut Padded<f64>) {
        let d = &mut field.data;
        for op in &self.ops {
            match *op {
                HaloOp::Copy { dst, src } => d[dst] = d[src],
                HaloOp::Constant { dst, value } => d[dst] = value,
                HaloOp::Wetting { dst, g1, g2, mirror, theta } => {
                    d[dst] = crate::boundary::wetting_ghost_value(d[mirror], d[g1[0]] - d[g1[1]], d[g2[0]] - d[g2[1]], theta)
                }
            }
        }
    }

    /// Vector variant: non-copy rules give zero.
    pub fn fill_vector(&self, field: &mut Padded<[f64; 3]>) {
        let d = &mut field.data;
        for op in &self.ops {
            match *op {
                HaloOp::Copy { dst, src } => d[dst] = d[src],
                HaloOp::Constant { dst, .. } | HaloOp::Wetting { dst, .. } => d[dst] = [0.0; 3],
            }
        }
    }
}

/// Fill the halo of a scalar field (see [`HaloPlan`] for the edge convention).
pub fn fill_scalar_halo(grid: &Grid, field: &mut Padded<f64>, rules: &[[HaloRule; 2]; 3]) {
    HaloPlan::new(grid, rules).fill_scalar(field);
}

/// Halo fill for a vector field; non-periodic rules other than zero-gradient give zero.
pub fn fill_vector_halo(grid: &Grid, field: &mut Padded<[f64; 3]>, rules: &[[HaloRule; 2]; 3]) {
    HaloPlan::new(grid, rules).fill_vector(field);
}

/// What a link does when its upstream node lies outside the grid through an open face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenLink {
    /// Leave the destination untouched.
    Keep,
    /// Reflect the node's own outgoing population, as at a wall.
    Reflect,
}

/// Precomputed pull-streaming sources. Nodes away from every face use fixed offsets;
/// the remaining nodes carry an explicit source slot per link (`None` keeps the value).
#[derive(Debug, Clone)]
pub struct StreamPlan {
    q: usize,
    dims: [usize; 3],
    offsets: Vec<isize>,
    edge_nodes: Vec<usize>,
    slab_start: Vec<usize>,
    sources: Vec<Option<usize>>,
}

impl StreamPlan {
    pub fn new(grid: &Grid, velocities: &[[i32; 3]], opposite: &[usize], open: OpenLink) -> Self {
        let q = velocities.len();
        let [nx, ny, nz] = grid.dims();
        let offsets = velocities
            .iter()
            .map(|c| c[0] as isize + nx as isize * (c[1] as isize + ny as isize * c[2] as isize))
            .collect();
        let mut edge_nodes = Vec::new();
        let mut slab_start = vec![0];
        let mut sources = Vec::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if Self::interior_at([nx, ny, nz], x, y, z) {
                        continue;
                    }
                    let n = grid.index(x, y, z);
                    edge_nodes.push(n);
                    for (i, c) in velocities.iter().enumerate() {
                        let back = [-c[0], -c[1], -c[2]];
                        let src = match grid.neighbor([x, y, z], back) {
                            Some(m) => Some(q * m + i),
                            None => match (grid.crossing([x, y, z], back), open) {
                                (Some(EdgeKind::Wall), _) | (_, OpenLink::Reflect) => Some(q * n + opposite[i]),
                                _ => None,
                            },
                        };
                        sources.push(src);
                    }
                }
            }
            slab_start.push(edge_nodes.len());
        }
        Self {
            q,
            dims: [nx, ny, nz],
            offsets,
            edge_nodes,
            slab_start,
            sources,
        }
    }

    #[inline(always)]
    fn interior_at(dims: [usize; 3], x: usize, y: usize, z: usize) -> bool {
        x >= 1 && x + 1 < dims[0] && y >= 1 && y + 1 < dims[1] && z >= 1 && z + 1 < dims[2]
    }

    /// For every destination slot call `op(node, incoming, &mut dst)`, in parallel over
    /// z-slabs of `out`. `Q` must equal the plan's velocity count.
    pub fn pull<const Q: usize, F>(&self, post: &[f64], out: &mut [f64], op: F)
    where
        F: Fn(usize, f64, &mut f64) + Sync,
    {
        assert_eq!(Q, self.q, "stream plan built for {} velocities", self.q);
        let [nx, ny, nz] = self.dims;
        let plane = nx * ny;
        let offsets: [isize; Q] = std::array::from_fn(|i| self.offsets[i]);
        out.par_chunks_mut(Q * plane).enumerate().for_each(|(z, slab)| {
            let base = z * plane;
            if z >= 1 && z + 1 < nz {
                for y in 1..ny.saturating_sub(1) {
                    for x in 1..nx - 1 {
                        let k = x + nx * y;
                        let n = base + k;
                        let dst: &mut [f64; Q] = (&mut slab[Q * k..Q * k + Q]).try_into().unwrap();
                        for i in 0..Q {
                            let src = (n as isize - offsets[i]) as usize;
                            op(n, post[Q * src + i], &mut dst[i]);
                        }
                    }
                }
            }
            for e in self.slab_start[z]..self.slab_start[z + 1] {
                let n = self.edge_nodes[e];
                let k = n - base;
                for i in 0..Q {
                    if let Some(src) = self.sources[Q * e + i] {
                        op(n, post[src], &mut slab[Q * k + i]);
                    }
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::periodic([5, 4, 3]);
        for n in 0..g.len() {
            let [x, y, z] = g.coords(n);
            assert_eq!(g.index(x, y, z), n);
        }
    }

    #[test]
    fn periodic_steps_wrap() {
        let g = Grid::periodic([4, 4, 4]);
        assert_eq!(g.step(0, 0, -1), Some(3));
        assert_eq!(g.step(0, 3, 1), Some(0));
        let w = Grid::new([4, 4, 4], [[EdgeKind::Wall; 2], [EdgeKind::Periodic; 2], [EdgeKind::Wall, EdgeKind::Open]]).unwrap();
        assert_eq!(w.step(0, 0, -1), None);
        assert_eq!(w.crossing([0, 0, 3], [-1, 0, 1]), Some(EdgeKind::Wall));
        assert_eq!(w.crossing([1, 0, 3], [0, 0, 1]), Some(EdgeKind::Open));
        assert_eq!(w.crossing([1, 0, 3], [0, 1, 0]), None);
        assert!(w.on_wall([0, 1, 1]));
        assert!(!w.on_wall([1, 1, 3]));
    }

    #[test]
    fn unpaired_periodic_rejected() {
        let r = Grid::new([4, 4, 4], [[EdgeKind::Periodic, EdgeKind::Wall], [EdgeKind::Periodic; 2], [EdgeKind::Periodic; 2]]);
        assert!(r.is_err());
    }

    fn random_field(grid: &Grid) -> Padded<f64> {
        let mut p = Padded::new(grid);
        let [nx, ny, nz] = grid.dims();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let v = ((x * 31 + y * 17 + z * 7) % 11) as f64 * 0.1 + 1.0;
                    p.set(grid, x as isize, y as isize, z as isize, v);
                }
            }
        }
        p
    }

    #[test]
    fn periodic_halo_matches_wrapped_interior() {
        let g = Grid::periodic([5, 4, 3]);
        let mut p = random_field(&g);
        let interior_before: Vec<f64> = (0..g.len())
            .map(|n| {
                let [x, y, z] = g.coords(n);
                p.at(&g, x as isize, y as isize, z as isize)
            })
            .collect();
        let rules = [[HaloRule::Periodic; 2]; 3];
        fill_scalar_halo(&g, &mut p, &rules);
        let once = p.data.clone();
        fill_scalar_halo(&g, &mut p, &rules);
        assert_eq!(once, p.data, "halo fill is idempotent");
        for x in -1..=5isize {
            for y in -1..=4isize {
                for z in -1..=3isize {
                    let w = [g.resolve(0, x), g.resolve(1, y), g.resolve(2, z)];
                    assert_eq!(p.at(&g, x, y, z), p.at(&g, w[0] as isize, w[1] as isize, w[2] as isize));
                }
            }
        }
        for n in 0..g.len() {
            let [x, y, z] = g.coords(n);
            assert_eq!(p.at(&g, x as isize, y as isize, z as isize), interior_before[n]);
        }
    }

    #[test]
    fn uniform_field_halo_is_uniform() {
        let g = Grid::new([4, 4, 4], [[EdgeKind::Periodic; 2], [EdgeKind::Periodic; 2], [EdgeKind::Wall, EdgeKind::Open]]).unwrap();
        let mut p = Padded::new(&g);
        p.data.iter_mut().for_each(|v| *v = 0.7);
        let rules = [
            [HaloRule::Periodic; 2],
            [HaloRule::Periodic; 2],
            [HaloRule::Wetting(2.0), HaloRule::ZeroGradient],
        ];
        fill_scalar_halo(&g, &mut p, &rules);
        assert!(p.data.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }
}
