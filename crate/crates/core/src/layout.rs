//! Parametric storage for per-node vector fields.
//!
//! A field of `beta` components over `n_nodes` nodes is stored in groups of
//! `alpha` nodes: within a group all nodes' component 0 come first, then all
//! component 1, and so on. `alpha = 1` is array-of-structures, `alpha >=
//! n_nodes` is structure-of-arrays, anything in between is the collected
//! structure-of-arrays (CSoA) layout.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Grid extents. Nodes are linearized x-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub const fn plane(&self) -> usize {
        self.nx * self.ny
    }

    /// Linear node index of `(x, y, z)`. Panics when out of bounds.
    #[inline]
    pub fn node_index(&self, x: usize, y: usize, z: usize) -> usize {
        assert!(
            x < self.nx && y < self.ny && z < self.nz,
            "node ({x},{y},{z}) outside {self:?}"
        );
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize, usize) {
        debug_assert!(k < self.len());
        let x = k % self.nx;
        let yz = k / self.nx;
        (x, yz % self.ny, yz / self.ny)
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        p[0] >= 0
            && p[1] >= 0
            && p[2] >= 0
            && (p[0] as usize) < self.nx
            && (p[1] as usize) < self.ny
            && (p[2] as usize) < self.nz
    }
}

/// Free-function form of [`Dims::node_index`].
pub fn node_index(x: usize, y: usize, z: usize, dims: Dims) -> usize {
    dims.node_index(x, y, z)
}

/// Parameters of the grouped index map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutParams {
    alpha: usize,
    beta: usize,
    n_nodes: usize,
    padded_nodes: usize,
    // log2(alpha) when alpha is a power of two
    shift: Option<u32>,
}

impl LayoutParams {
    pub fn new(alpha: usize, beta: usize, n_nodes: usize) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::Layout("alpha must be >= 1".into()));
        }
        if beta == 0 {
            return Err(Error::Layout("beta must be >= 1".into()));
        }
        let padded_nodes = n_nodes.div_ceil(alpha) * alpha;
        let shift = alpha.is_power_of_two().then(|| alpha.trailing_zeros());
        Ok(LayoutParams {
            alpha,
            beta,
            n_nodes,
            padded_nodes,
            shift,
        })
    }

    pub fn aos(beta: usize, n_nodes: usize) -> Self {
        Self::new(1, beta, n_nodes).expect("beta >= 1")
    }

    /// Structure-of-arrays: a single group spanning all nodes.
    pub fn soa(beta: usize, n_nodes: usize) -> Self {
        Self::new(n_nodes.max(1), beta, n_nodes).expect("beta >= 1")
    }

    pub fn with_beta(&self, beta: usize) -> Result<Self> {
        Self::new(self.alpha, beta, self.n_nodes)
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn padded_nodes(&self) -> usize {
        self.padded_nodes
    }

    /// Length of the backing array.
    pub fn storage_len(&self) -> usize {
        self.padded_nodes * self.beta
    }

    /// Nodes from `k` up to `end` that share `k`'s group, capped at `end`.
    #[inline(always)]
    pub fn run_len(&self, k: usize, end: usize) -> usize {
        let lane = match self.shift {
            Some(_) => k & (self.alpha - 1),
            None => k % self.alpha,
        };
        (self.alpha - lane).min(end - k)
    }

    /// Offset of the group base for node `k`; component `i` lives at
    /// `base + i * alpha`.
    #[inline(always)]
    pub fn node_base(&self, k: usize) -> usize {
        match self.shift {
            Some(s) => (((k >> s) * self.beta) << s) + (k & (self.alpha - 1)),
            None => (k / self.alpha) * self.beta * self.alpha + k % self.alpha,
        }
    }

    /// Distance between consecutive components of one node.
    #[inline(always)]
    pub fn stride(&self) -> usize {
        self.alpha
    }

    #[inline(always)]
    pub fn offset(&self, k: usize, i: usize) -> usize {
        debug_assert!(k < self.padded_nodes && i < self.beta);
        self.node_base(k) + i * self.alpha
    }
}

/// `beta*alpha*floor(k/alpha) + alpha*i + k mod alpha`, with range checks.
pub fn remap_index(k: usize, i: usize, p: &LayoutParams) -> usize {
    assert!(k < p.padded_nodes, "node {k} outside padded range {}", p.padded_nodes);
    assert!(i < p.beta, "component {i} outside beta {}", p.beta);
    p.beta * p.alpha * (k / p.alpha) + p.alpha * i + k % p.alpha
}

/// A vector field stored under a [`LayoutParams`] map.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStore {
    layout: LayoutParams,
    data: Vec<f64>,
}

impl FieldStore {
    pub fn zeros(layout: LayoutParams) -> Self {
        FieldStore {
            data: vec![0.0; layout.storage_len()],
            layout,
        }
    }

    /// Builds a store from logical values given in AoS order (`k * beta + i`).
    pub fn from_aos(layout: LayoutParams, values: &[f64]) -> Result<Self> {
        if values.len() != layout.n_nodes * layout.beta {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                layout.n_nodes * layout.beta,
                values.len()
            )));
        }
        let mut s = Self::zeros(layout);
        for k in 0..layout.n_nodes {
            for i in 0..layout.beta {
                s.set(k, i, values[k * layout.beta + i]);
            }
        }
        Ok(s)
    }

    pub fn layout(&self) -> &LayoutParams {
        &self.layout
    }

    pub fn n_nodes(&self) -> usize {
        self.layout.n_nodes
    }

    pub fn beta(&self) -> usize {
        self.layout.beta
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Component `i` of nodes `k..k + len`, contiguous when the nodes share a
    /// group (see [`LayoutParams::run_len`]).
    #[inline(always)]
    pub fn component_run(&self, k: usize, i: usize, len: usize) -> &[f64] {
        assert!(len <= self.layout.run_len(k, k + len), "run crosses a group");
        let o = self.layout.offset(k, i);
        &self.data[o..o + len]
    }

    #[inline(always)]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[self.layout.offset(k, i)]
    }

    #[inline(always)]
    pub fn set(&mut self, k: usize, i: usize, v: f64) {
        let o = self.layout.offset(k, i);
        self.data[o] = v;
    }

    /// Reads all components of node `k` into `out`.
    #[inline(always)]
    pub fn read_node(&self, k: usize, out: &mut [f64]) {
        let base = self.layout.node_base(k);
        let s = self.layout.alpha;
        for (i, v) in out.iter_mut().enumerate().take(self.layout.beta) {
            *v = self.data[base + i * s];
        }
    }

    #[inline(always)]
    pub fn write_node(&mut self, k: usize, vals: &[f64]) {
        let base = self.layout.node_base(k);
        let s = self.layout.alpha;
        for (i, v) in vals.iter().enumerate().take(self.layout.beta) {
            self.data[base + i * s] = *v;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Logical values in AoS order, padding dropped.
    pub fn to_aos(&self) -> Vec<f64> {
        let b = self.layout.beta;
        let mut out = vec![0.0; self.layout.n_nodes * b];
        for k in 0..self.layout.n_nodes {
            self.read_node(k, &mut out[k * b..(k + 1) * b]);
        }
        out
    }

    /// Handle for concurrent writes to disjoint slots.
    pub fn shared(&mut self) -> SharedField<'_> {
        SharedField {
            ptr: self.data.as_mut_ptr(),
            len: self.data.len(),
            layout: self.layout,
            _marker: std::marker::PhantomData,
        }
    }
}

/// Re-lays a field under new group size; the payload is permuted, logical
/// values are unchanged.
pub fn convert_layout(src: &FieldStore, dst_params: LayoutParams) -> Result<FieldStore> {
    if src.layout.n_nodes != dst_params.n_nodes || src.layout.beta != dst_params.beta {
        return Err(Error::Shape(format!(
            "cannot convert {} nodes x {} components into {} nodes x {}",
            src.layout.n_nodes, src.layout.beta, dst_params.n_nodes, dst_params.beta
        )));
    }
    let mut dst = FieldStore::zeros(dst_params);
    let b = dst_params.beta;
    let mut buf = vec![0.0; b];
    for k in 0..dst_params.n_nodes {
        src.read_node(k, &mut buf);
        dst.write_node(k, &buf);
    }
    Ok(dst)
}

/// Raw writer over a [`FieldStore`] that lets several workers write at once.
///
/// Callers must guarantee that concurrent writers never touch the same
/// `(k, i)` slot and that nobody reads a slot while it is written.
#[derive(Clone, Copy)]
pub struct SharedField<'a> {
    ptr: *mut f64,
    len: usize,
    layout: LayoutParams,
    _marker: std::marker::PhantomData<&'a mut [f64]>,
}

unsafe impl Send for SharedField<'_> {}
unsafe impl Sync for SharedField<'_> {}

impl SharedField<'_> {
    pub fn layout(&self) -> &LayoutParams {
        &self.layout
    }

    /// # Safety
    /// No other thread may access slot `(k, i)` concurrently.
    #[inline(always)]
    pub unsafe fn set(&self, k: usize, i: usize, v: f64) {
        let o = self.layout.offset(k, i);
        assert!(o < self.len);
        *self.ptr.add(o) = v;
    }

    /// Copies `src` to raw offsets `o..o + src.len()`.
    ///
    /// # Safety
    /// The range must not be accessed by another thread concurrently.
    #[inline(always)]
    pub unsafe fn copy_in(&self, o: usize, src: &[f64]) {
        assert!(o + src.len() <= self.len);
        std::ptr::copy_nonoverlapping(src.as_ptr(), self.ptr.add(o), src.len());
    }

    /// Copies raw offsets `o..o + dst.len()` into `dst`.
    ///
    /// # Safety
    /// As for [`SharedField::copy_in`].
    #[inline(always)]
    pub unsafe fn copy_out(&self, o: usize, dst: &mut [f64]) {
        assert!(o + dst.len() <= self.len);
        std::ptr::copy_nonoverlapping(self.ptr.add(o), dst.as_mut_ptr(), dst.len());
    }

    /// Writes raw storage offset `o`.
    ///
    /// # Safety
    /// `o` must be in range and no other thread may access it concurrently.
    #[inline(always)]
    pub unsafe fn set_offset(&self, o: usize, v: f64) {
        debug_assert!(o < self.len);
        *self.ptr.add(o) = v;
    }

    /// # Safety
    /// As for [`SharedField::set_offset`].
    #[inline(always)]
    pub unsafe fn get_offset(&self, o: usize) -> f64 {
        debug_assert!(o < self.len);
        *self.ptr.add(o)
    }

    /// # Safety
    /// No other thread may write slot `(k, i)` concurrently.
    #[inline(always)]
    pub unsafe fn get(&self, k: usize, i: usize) -> f64 {
        let o = self.layout.offset(k, i);
        assert!(o < self.len);
        *self.ptr.add(o)
    }

    /// # Safety
    /// No other thread may access any slot of node `k` concurrently.
    #[inline(always)]
    pub unsafe fn write_node(&self, k: usize, vals: &[f64]) {
        let base = self.layout.node_base(k);
        let s = self.layout.alpha;
        let last = base + (vals.len().saturating_sub(1)) * s;
        assert!(last < self.len);
        for (i, v) in vals.iter().enumerate() {
            *self.ptr.add(base + i * s) = *v;
        }
    }

    /// # Safety
    /// As for [`SharedField::write_node`].
    #[inline(always)]
    pub unsafe fn read_node(&self, k: usize, out: &mut [f64]) {
        let base = self.layout.node_base(k);
        let s = self.layout.alpha;
        let last = base + (out.len().saturating_sub(1)) * s;
        assert!(last < self.len);
        for (i, v) in out.iter_mut().enumerate() {
            *v = *self.ptr.add(base + i * s);
        }
    }
}

/// A pair of stores for fields needing both time `t` and `t+1`.
#[derive(Debug, Clone)]
pub struct DoubleBuffer {
    pub current: FieldStore,
    pub next: FieldStore,
}

impl DoubleBuffer {
    pub fn new(layout: LayoutParams) -> Self {
        DoubleBuffer {
            current: FieldStore::zeros(layout),
            next: FieldStore::zeros(layout),
        }
    }

    pub fn swap(&mut self) {
        std::mem::swap(&mut self.current, &mut self.next);
    }

    pub fn split(&mut self) -> (&FieldStore, &mut FieldStore) {
        (&self.current, &mut self.next)
    }
}

const DUMP_MAGIC: &[u8; 4] = b"KFLD";
const DUMP_VERSION: u32 = 1;

/// Header of a binary field dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub dims: Dims,
    pub beta: usize,
    pub alpha: usize,
    pub scalar_width: u32,
}

/// Writes `store` in its own layout order.
///
/// Format (little endian): `b"KFLD"`, `u32` version, `u64` nx, ny, nz, `u32`
/// beta, `u64` alpha, `u32` scalar width in bytes (8), `u64` payload count,
/// then the payload as `f64`. Padding slots are written as stored.
pub fn write_dump<W: Write>(w: &mut W, dims: Dims, store: &FieldStore) -> std::io::Result<()> {
    let l = store.layout();
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    for n in [dims.nx, dims.ny, dims.nz] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&(l.beta as u32).to_le_bytes())?;
    w.write_all(&(l.alpha as u64).to_le_bytes())?;
    w.write_all(&8u32.to_le_bytes())?;
    w.write_all(&(store.raw().len() as u64).to_le_bytes())?;
    let mut bytes = Vec::with_capacity(store.raw().len() * 8);
    for v in store.raw() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
}

/// Writes the layout-independent AoS form of `store`.
pub fn write_canonical<W: Write>(w: &mut W, dims: Dims, store: &FieldStore) -> std::io::Result<()> {
    let aos = if store.layout().alpha() == 1 {
        store.clone()
    } else {
        convert_layout(store, LayoutParams::aos(store.beta(), store.n_nodes()))
            .expect("same shape")
    };
    write_dump(w, dims, &aos)
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a dump written by [`write_dump`] or [`write_canonical`].
pub fn read_dump<R: Read>(r: &mut R) -> std::result::Result<(DumpHeader, FieldStore), String> {
    let io = |e: std::io::Error| e.to_string();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != DUMP_MAGIC {
        return Err("bad magic".into());
    }
    let version = read_u32(r).map_err(io)?;
    if version != DUMP_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let nx = read_u64(r).map_err(io)? as usize;
    let ny = read_u64(r).map_err(io)? as usize;
    let nz = read_u64(r).map_err(io)? as usize;
    let beta = read_u32(r).map_err(io)? as usize;
    let alpha = read_u64(r).map_err(io)? as usize;
    let width = read_u32(r).map_err(io)?;
    if width != 8 {
        return Err(format!("unsupported scalar width {width}"));
    }
    let count = read_u64(r).map_err(io)? as usize;
    let dims = Dims::new(nx, ny, nz);
    let layout = LayoutParams::new(alpha, beta, dims.len()).map_err(|e| e.to_string())?;
    if count != layout.storage_len() {
        return Err(format!(
            "payload count {count} does not match layout ({})",
            layout.storage_len()
        ));
    }
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(io)?;
    let mut store = FieldStore::zeros(layout);
    for (v, chunk) in store.raw_mut().iter_mut().zip(bytes.chunks_exact(8)) {
        *v = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok((
        DumpHeader {
            dims,
            beta,
            alpha,
            scalar_width: width,
        },
        store,
    ))
}

pub fn save_canonical(path: &Path, dims: Dims, store: &FieldStore) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_canonical(&mut w, dims, store).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dump(path: &Path) -> Result<(DumpHeader, FieldStore)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dump(&mut std::io::BufReader::new(f)).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn remap_example_alpha4() {
        let p = LayoutParams::new(4, 27, 16).unwrap();
        assert_eq!(remap_index(5, 2, &p), 117);
        assert_eq!(p.offset(5, 2), 117);
    }

    #[test]
    fn remap_aos_and_soa() {
        let n = 37;
        let aos = LayoutParams::aos(27, n);
        let soa = LayoutParams::soa(27, n);
        for k in 0..n {
            for i in 0..27 {
                assert_eq!(remap_index(k, i, &aos), 27 * k + i);
                assert_eq!(remap_index(k, i, &soa), n * i + k);
                assert_eq!(aos.offset(k, i), 27 * k + i);
                assert_eq!(soa.offset(k, i), n * i + k);
            }
        }
    }

    #[test]
    #[should_panic]
    fn remap_rejects_component() {
        let p = LayoutParams::new(4, 3, 8).unwrap();
        remap_index(0, 3, &p);
    }

    #[test]
    #[should_panic]
    fn remap_rejects_node() {
        let p = LayoutParams::new(4, 3, 8).unwrap();
        remap_index(8, 0, &p);
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(LayoutParams::new(0, 27, 8).is_err());
        assert!(LayoutParams::new(2, 0, 8).is_err());
    }

    #[test]
    fn padding_rounds_up() {
        let p = LayoutParams::new(8, 3, 13).unwrap();
        assert_eq!(p.padded_nodes(), 16);
        assert_eq!(p.storage_len(), 48);
    }

    // Exhaustive enumeration: the map is a bijection onto [0, padded*beta).
    #[test]
    fn remap_bijection_enumeration() {
        for n in [1usize, 7, 16, 27, 64] {
            for alpha in [1usize, 2, 3, 4, 5, 8, 16, 64] {
                for beta in [1usize, 3, 27] {
                    let p = LayoutParams::new(alpha, beta, n).unwrap();
                    let mut hit = vec![false; p.storage_len()];
                    for k in 0..p.padded_nodes() {
                        for i in 0..beta {
                            let o = remap_index(k, i, &p);
                            assert_eq!(o, p.offset(k, i));
                            assert!(!hit[o]);
                            hit[o] = true;
                        }
                    }
                    assert!(hit.iter().all(|h| *h));
                }
            }
        }
    }

    #[test]
    fn node_index_examples() {
        let d = Dims::new(4, 4, 4);
        assert_eq!(node_index(0, 0, 0, d), 0);
        assert_eq!(node_index(1, 0, 0, d), 1);
        assert_eq!(node_index(3, 2, 1, d), 27);
        // nested-loop oracle
        let mut k = 0;
        for z in 0..4 {
            for y in 0..4 {
                for x in 0..4 {
                    assert_eq!(d.node_index(x, y, z), k);
                    assert_eq!(d.coords(k), (x, y, z));
                    k += 1;
                }
            }
        }
    }

    #[test]
    #[should_panic]
    fn node_index_out_of_bounds() {
        Dims::new(4, 4, 4).node_index(4, 0, 0);
    }

    #[test]
    fn convert_alpha4_to_alpha8_keeps_value() {
        let vals: Vec<f64> = (0..16 * 27).map(|v| v as f64 * 0.5).collect();
        let a4 = FieldStore::from_aos(LayoutParams::new(4, 27, 16).unwrap(), &vals).unwrap();
        let p8 = LayoutParams::new(8, 27, 16).unwrap();
        let a8 = convert_layout(&a4, p8).unwrap();
        let expect = a4.raw()[remap_index(9, 3, a4.layout())];
        assert_eq!(a8.raw()[remap_index(9, 3, &p8)], expect);
        assert_eq!(expect, vals[9 * 27 + 3]);
    }

    #[test]
    fn convert_round_trip_and_zeros() {
        let n = 50;
        let vals: Vec<f64> = (0..n * 27).map(|v| (v as f64).sin()).collect();
        let aos = FieldStore::from_aos(LayoutParams::aos(27, n), &vals).unwrap();
        let soa = convert_layout(&aos, LayoutParams::soa(27, n)).unwrap();
        let back = convert_layout(&soa, LayoutParams::aos(27, n)).unwrap();
        assert_eq!(back, aos);

        let z = FieldStore::zeros(LayoutParams::new(8, 27, n).unwrap());
        let c = convert_layout(&z, LayoutParams::new(2, 27, n).unwrap()).unwrap();
        assert!(c.raw().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn convert_shape_mismatch() {
        let a = FieldStore::zeros(LayoutParams::aos(27, 8));
        assert!(convert_layout(&a, LayoutParams::aos(3, 8)).is_err());
        assert!(convert_layout(&a, LayoutParams::aos(27, 9)).is_err());
    }

    #[test]
    fn dump_round_trip_bit_exact() {
        let dims = Dims::new(3, 4, 5);
        let n = dims.len();
        let vals: Vec<f64> = (0..n * 3).map(|v| (v as f64).cos() * 1e-3).collect();
        let store = FieldStore::from_aos(LayoutParams::new(8, 3, n).unwrap(), &vals).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, dims, &store).unwrap();
        let (h, back) = read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(h.dims, dims);
        assert_eq!(h.alpha, 8);
        assert_eq!(back, store);

        let mut canon = Vec::new();
        write_canonical(&mut canon, dims, &store).unwrap();
        let (h, back) = read_dump(&mut canon.as_slice()).unwrap();
        assert_eq!(h.alpha, 1);
        assert_eq!(back.to_aos(), vals);
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(read_dump(&mut &b"NOPE0000"[..]).is_err());
    }

    proptest! {
        // Logical contents survive any chain of conversions (grids up to 8^3).
        #[test]
        fn convert_preserves_contents(n in 1usize..512, a in 0u32..10, b in 0u32..10, beta in 1usize..28) {
            let vals: Vec<f64> = (0..n * beta).map(|v| v as f64 + 0.25).collect();
            let src = FieldStore::from_aos(LayoutParams::new(1 << a, beta, n).unwrap(), &vals).unwrap();
            let dst = convert_layout(&src, LayoutParams::new(1 << b, beta, n).unwrap()).unwrap();
            prop_assert_eq!(dst.to_aos(), vals);
        }

        #[test]
        fn node_base_matches_remap(k in 0usize..4096, i in 0usize..27, alpha in 1usize..100) {
            let p = LayoutParams::new(alpha, 27, 4096).unwrap();
            prop_assert_eq!(p.offset(k, i), remap_index(k, i, &p));
        }
    }
}
