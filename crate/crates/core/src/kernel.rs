//! Blocked squared-Euclidean kernel based on the Gram expansion
//! `d(i, j) = |x_i|^2 + |x_j|^2 - 2 <x_i, x_j>`.
//!
//! Every path (full matrix, tiled, sampled, k-NN) goes through this module, so
//! a given pair of rows always produces the same bits: dot products accumulate
//! over features in index order with separate multiply and add, and each SIMD
//! lane holds one independent pair.

/// Reference rows packed per block.
pub(crate) const LANES: usize = 8;
const QUERY_ROWS: usize = 4;

/// Sequential dot product; the scalar twin of the blocked kernel.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub fn squared_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Gram-expansion distance with round-off negatives clamped to zero.
#[inline]
pub fn gram_distance(norm_a: f64, norm_b: f64, dot_ab: f64) -> f64 {
    let d = (norm_a + norm_b) - 2.0 * dot_ab;
    if d > 0.0 {
        d
    } else {
        0.0
    }
}

/// Squared norms of every row of a row-major `values` buffer with `n` columns.
pub(crate) fn row_norms(values: &[f64], n: usize) -> Vec<f64> {
    values.chunks_exact(n).map(squared_norm).collect()
}

/// A contiguous range of reference rows stored feature-major so that one
/// feature of `LANES` consecutive rows is a contiguous load.
pub(crate) struct Packed {
    pub start: usize,
    pub len: usize,
    padded: usize,
    n: usize,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl Packed {
    pub fn new(values: &[f64], n: usize, norms: &[f64], start: usize, len: usize) -> Self {
        let padded = len.div_ceil(LANES) * LANES;
        let mut data = vec![0.0; n * padded];
        for r in 0..len {
            let row = &values[(start + r) * n..(start + r + 1) * n];
            for (k, &v) in row.iter().enumerate() {
                data[k * padded + r] = v;
            }
        }
        Packed { start, len, padded, n, data, norms: norms[start..start + len].to_vec() }
    }

    /// Reuses the allocation for another block of the same width.
    pub fn repack(&mut self, values: &[f64], norms: &[f64], start: usize, len: usize) {
        let padded = len.div_ceil(LANES) * LANES;
        self.data.clear();
        self.data.resize(self.n * padded, 0.0);
        for r in 0..len {
            let row = &values[(start + r) * self.n..(start + r + 1) * self.n];
            for (k, &v) in row.iter().enumerate() {
                self.data[k * padded + r] = v;
            }
        }
        self.norms.clear();
        self.norms.extend_from_slice(&norms[start..start + len]);
        self.start = start;
        self.len = len;
        self.padded = padded;
    }
}

/// Calls `visit(q, j, d)` for every query `q` (position in `queries`) and every
/// reference row `j` (absolute index) of `packed`.
pub(crate) fn visit_block<F>(queries: &[&[f64]], qnorms: &[f64], packed: &Packed, visit: &mut F)
where
    F: FnMut(usize, usize, f64),
{
    visit_blocks(queries, qnorms, packed, &mut |q0, j0, live, d| {
        for (r, row) in d.iter().enumerate() {
            for (l, &v) in row[..live].iter().enumerate() {
                visit(q0 + r, j0 + l, v);
            }
        }
    })
}

/// Block form of [`visit_block`]: `visit(q0, j0, live, d)` receives distances
/// `d[r][l]` between query `q0 + r` and reference row `j0 + l` for
/// `l < live`. Lanes at or past `live` hold `+inf`.
pub(crate) fn visit_blocks<F>(queries: &[&[f64]], qnorms: &[f64], packed: &Packed, visit: &mut F)
where
    F: FnMut(usize, usize, usize, &[[f64; LANES]]),
{
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            unsafe { visit_blocks_avx2(queries, qnorms, packed, visit) };
            return;
        }
    }
    visit_blocks_impl(queries, qnorms, packed, visit)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn visit_blocks_avx2<F>(queries: &[&[f64]], qnorms: &[f64], packed: &Packed, visit: &mut F)
where
    F: FnMut(usize, usize, usize, &[[f64; LANES]]),
{
    visit_blocks_impl(queries, qnorms, packed, visit)
}

#[inline(always)]
fn visit_blocks_impl<F>(queries: &[&[f64]], qnorms: &[f64], packed: &Packed, visit: &mut F)
where
    F: FnMut(usize, usize, usize, &[[f64; LANES]]),
{
    let mut q = 0;
    while q + QUERY_ROWS <= queries.len() {
        micro::<QUERY_ROWS, F>(&queries[q..q + QUERY_ROWS], &qnorms[q..q + QUERY_ROWS], q, packed, visit);
        q += QUERY_ROWS;
    }
    while q < queries.len() {
        micro::<1, F>(&queries[q..q + 1], &qnorms[q..q + 1], q, packed, visit);
        q += 1;
    }
}

#[inline(always)]
fn micro<const R: usize, F>(rows: &[&[f64]], qnorms: &[f64], q0: usize, packed: &Packed, visit: &mut F)
where
    F: FnMut(usize, usize, usize, &[[f64; LANES]]),
{
    let n = packed.n;
    let w = packed.padded;
    let rows: [&[f64]; R] = std::array::from_fn(|r| &rows[r][..n]);
    let mut jb = 0;
    while jb < w {
        let mut acc = [[0.0f64; LANES]; R];
        for k in 0..n {
            let col: &[f64; LANES] = packed.data[k * w + jb..k * w + jb + LANES].try_into().unwrap();
            for r in 0..R {
                let s = rows[r][k];
                for l in 0..LANES {
                    acc[r][l] += s * col[l];
                }
            }
        }
        let live = LANES.min(packed.len - jb);
        let mut dist = [[f64::INFINITY; LANES]; R];
        for r in 0..R {
            for l in 0..live {
                dist[r][l] = gram_distance(qnorms[r], packed.norms[jb + l], acc[r][l]);
            }
        }
        visit(q0, packed.start + jb, live, &dist);
        jb += LANES;
    }
}
