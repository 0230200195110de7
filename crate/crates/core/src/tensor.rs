//! Complex scalars, small dense tensors, unitary matrices and frame changes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Cx = Complex64;
pub type CMatrix = DMatrix<Cx>;

/// Largest complex dimension handled anywhere in the crate.
pub const MAX_DIM: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-12;

pub const ZERO: Cx = Cx::new(0.0, 0.0);
pub const ONE: Cx = Cx::new(1.0, 0.0);
pub const I: Cx = Cx::new(0.0, 1.0);

pub fn cx(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

pub fn is_finite(z: Cx) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexKind {
    Upper,
    Lower,
    LowerBar,
    /// Derivative slot of extent 2n: e_1..e_n then ē_1..ē_n.
    Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Antisymmetric(usize, usize),
    /// T[.., i, .., j, ..] = conj(T[.., j, .., i, ..])
    Hermitian(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<Cx>,
    kinds: Vec<IndexKind>,
    symmetries: Vec<Symmetry>,
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

fn check_extents(dims: &[usize], kinds: &[IndexKind]) -> Result<()> {
    if dims.len() != kinds.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} extents but {} index kinds",
            dims.len(),
            kinds.len()
        )));
    }
    for (d, k) in dims.iter().zip(kinds) {
        let cap = if *k == IndexKind::Direction { 2 * MAX_DIM } else { MAX_DIM };
        if *d == 0 || *d > cap {
            return Err(Error::DimensionMismatch(format!("extent {d} outside 1..={cap}")));
        }
    }
    Ok(())
}

impl DenseTensor {
    pub fn zeros(dims: &[usize], kinds: &[IndexKind]) -> Result<Self> {
        let len = dims.iter().product();
        Self::from_vec(dims, kinds, vec![ZERO; len])
    }

    pub fn from_vec(dims: &[usize], kinds: &[IndexKind], data: Vec<Cx>) -> Result<Self> {
        check_extents(dims, kinds)?;
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for extents {:?}",
                data.len(),
                dims
            )));
        }
        if !data.iter().all(|z| is_finite(*z)) {
            return Err(Error::NotFinite("tensor entries"));
        }
        Ok(DenseTensor {
            dims: dims.to_vec(),
            strides: strides_of(dims),
            data,
            kinds: kinds.to_vec(),
            symmetries: Vec::new(),
        })
    }

    /// Same as `from_vec` without the extent cap; used for tensors on the
    /// complexified frame (extent 2n on every slot).
    pub(crate) fn from_vec_wide(dims: &[usize], kinds: &[IndexKind], data: Vec<Cx>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        DenseTensor {
            dims: dims.to_vec(),
            strides: strides_of(dims),
            data,
            kinds: kinds.to_vec(),
            symmetries: Vec::new(),
        }
    }

    /// Builds a tensor from a closure over multi-indices.
    pub fn from_fn(
        dims: &[usize],
        kinds: &[IndexKind],
        mut f: impl FnMut(&[usize]) -> Cx,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.iter().product());
        for_each_index(dims, |ix| data.push(f(ix)));
        Self::from_vec(dims, kinds, data)
    }

    /// Declares a symmetry. The data must satisfy it to within
    /// `SYMMETRY_TOL`; it is then projected so the relation holds exactly.
    pub fn with_symmetry(mut self, sym: Symmetry) -> Result<Self> {
        let (a, b) = match sym {
            Symmetry::Antisymmetric(a, b) | Symmetry::Hermitian(a, b) => (a, b),
        };
        if a >= self.rank() || b >= self.rank() || a == b || self.dims[a] != self.dims[b] {
            return Err(Error::DimensionMismatch(format!("bad symmetry axes ({a},{b})")));
        }
        let mut worst = 0.0f64;
        let dims = self.dims.clone();
        let mut pairs = Vec::new();
        for_each_index(&dims, |ix| {
            if ix[a] <= ix[b] {
                let mut jx = ix.to_vec();
                jx.swap(a, b);
                pairs.push((self.offset(ix), self.offset(&jx)));
            }
        });
        for (p, q) in pairs {
            let (x, y) = (self.data[p], self.data[q]);
            match sym {
                Symmetry::Antisymmetric(..) => {
                    worst = worst.max((x + y).norm());
                    let m = (x - y) * 0.5;
                    self.data[p] = m;
                    self.data[q] = -m;
                }
                Symmetry::Hermitian(..) => {
                    worst = worst.max((x - y.conj()).norm());
                    let m = (x + y.conj()) * 0.5;
                    self.data[p] = m;
                    self.data[q] = m.conj();
                }
            }
        }
        if worst > SYMMETRY_TOL {
            return Err(Error::SymmetryViolated { residual: worst });
        }
        self.symmetries.push(sym);
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn kinds(&self) -> &[IndexKind] {
        &self.kinds
    }
    pub fn symmetries(&self) -> &[Symmetry] {
        &self.symmetries
    }
    pub fn data(&self) -> &[Cx] {
        &self.data
    }

    #[inline]
    pub fn offset(&self, ix: &[usize]) -> usize {
        debug_assert_eq!(ix.len(), self.dims.len());
        ix.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn at(&self, ix: &[usize]) -> Cx {
        self.data[self.offset(ix)]
    }

    /// Mutable access drops declared symmetry metadata, since the caller may break it.
    pub fn set(&mut self, ix: &[usize], v: Cx) {
        let o = self.offset(ix);
        self.data[o] = v;
        self.symmetries.clear();
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise difference; extents must agree.
    pub fn max_diff(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    pub fn conj(&self) -> DenseTensor {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    /// Applies `m` (rows indexed by the new index) along one axis.
    fn transform_axis(&self, axis: usize, m: &CMatrix) -> DenseTensor {
        let d = self.dims[axis];
        let stride = self.strides[axis];
        let mut out = vec![ZERO; self.data.len()];
        for (o, slot) in out.iter_mut().enumerate() {
            let i = (o / stride) % d;
            let base = o - i * stride;
            let mut acc = ZERO;
            for a in 0..d {
                acc += m[(i, a)] * self.data[base + a * stride];
            }
            *slot = acc;
        }
        DenseTensor {
            dims: self.dims.clone(),
            strides: self.strides.clone(),
            data: out,
            kinds: self.kinds.clone(),
            symmetries: self.symmetries.clone(),
        }
    }
}

/// Calls `f` on every multi-index of `dims` in row-major order.
pub fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut ix = vec![0usize; dims.len()];
    loop {
        f(&ix);
        let mut a = dims.len();
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            ix[a] += 1;
            if ix[a] < dims[a] {
                break;
            }
            ix[a] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    m: CMatrix,
}

pub const UNITARY_TOL: f64 = 1e-10;

pub fn max_abs_matrix(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 || m.nrows() > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("{}x{} frame matrix", m.nrows(), m.ncols())));
        }
        if !m.iter().all(|z| is_finite(*z)) {
            return Err(Error::NotFinite("unitary matrix"));
        }
        let n = m.nrows();
        let residual = max_abs_matrix(&(&m * m.adjoint() - CMatrix::identity(n, n)));
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(UnitaryMatrix { m })
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix { m: CMatrix::identity(n, n) }
    }

    /// Haar-distributed sample: QR of a complex Ginibre matrix with the
    /// phases of R's diagonal moved into Q.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = CMatrix::from_fn(n, n, |_, _| {
            cx(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            let d = r[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
        UnitaryMatrix { m: q }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }
    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix { m: self.m.adjoint() }
    }
    pub fn mul(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix { m: &self.m * &other.m }
    }
    pub fn conj(&self) -> CMatrix {
        self.m.map(|z| z.conj())
    }
}

/// Re-expresses `t` in the frame e' = U e, i.e. e'_i = Σ_j U_ij e_j.
///
/// Lower axes pick up U, upper and lower-barred axes pick up conj(U), and a
/// direction axis (extent 2n) picks up diag(U, conj U).
pub fn change_frame(t: &DenseTensor, u: &UnitaryMatrix) -> Result<DenseTensor> {
    let n = u.n();
    let um = u.matrix().clone();
    let uc = u.conj();
    let mut dir = CMatrix::zeros(2 * n, 2 * n);
    dir.view_mut((0, 0), (n, n)).copy_from(&um);
    dir.view_mut((n, n), (n, n)).copy_from(&uc);
    let mut out = t.clone();
    for (axis, kind) in t.kinds().iter().enumerate() {
        let want = if *kind == IndexKind::Direction { 2 * n } else { n };
        if t.dims()[axis] != want {
            return Err(Error::DimensionMismatch(format!(
                "axis {axis} has extent {} but the frame has n = {n}",
                t.dims()[axis]
            )));
        }
        let m = match kind {
            IndexKind::Lower => &um,
            IndexKind::Upper | IndexKind::LowerBar => &uc,
            IndexKind::Direction => &dir,
        };
        out = out.transform_axis(axis, m);
    }
    Ok(out)
}

/// Total order used for eigenvalues: Re descending, then Im descending,
/// with real parts closer than `tol` treated as equal.
fn eig_before(a: Cx, b: Cx, tol: f64) -> bool {
    if (a.re - b.re).abs() >= tol {
        a.re > b.re
    } else {
        a.im > b.im
    }
}

/// Unitary diagonalization of a normal matrix: returns U and d with
/// U* M U = diag(d).
pub fn unitary_diagonalize_normal(m: &CMatrix, tol: f64) -> Result<(UnitaryMatrix, Vec<Cx>)> {
    if !m.is_square() || m.nrows() == 0 || m.nrows() > MAX_DIM {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix", m.nrows(), m.ncols())));
    }
    if !m.iter().all(|z| is_finite(*z)) {
        return Err(Error::NotFinite("matrix"));
    }
    let n = m.nrows();
    let ma = m.adjoint();
    let residual = max_abs_matrix(&(m * &ma - &ma * m));
    if residual >= tol {
        return Err(Error::NotNormal { residual });
    }
    const MAX_ITER: usize = 10_000;
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, MAX_ITER)
        .ok_or(Error::NoConvergence { iterations: MAX_ITER })?;
    let (q, t) = schur.unpack();

    // selection sort keeps the comparator free of total-order requirements
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let mut best = 0;
        for p in 1..remaining.len() {
            if eig_before(t[(remaining[p], remaining[p])], t[(remaining[best], remaining[best])], tol) {
                best = p;
            }
        }
        order.push(remaining.remove(best));
    }
    let d: Vec<Cx> = order.iter().map(|&k| t[(k, k)]).collect();

    // clusters of consecutive eigenvalues closer than tol
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (pos, &val) in d.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if c.iter().any(|&p| (d[p] - val).norm() < tol) => c.push(pos),
            _ => clusters.push(vec![pos]),
        }
    }

    let mut u = CMatrix::zeros(n, n);
    for cluster in &clusters {
        let cols: Vec<_> = cluster.iter().map(|&p| q.column(order[p]).into_owned()).collect();
        // candidates: standard basis vectors projected onto the eigenspace
        let mut cands: Vec<nalgebra::DVector<Cx>> = (0..n)
            .map(|k| {
                let mut v = nalgebra::DVector::<Cx>::zeros(n);
                for c in &cols {
                    v += c * c[k].conj();
                }
                v
            })
            .collect();
        for &pos in cluster {
            let mut best = 0;
            let mut best_norm = -1.0;
            for (k, c) in cands.iter().enumerate() {
                let nk = c.norm();
                if nk > best_norm + 1e-12 {
                    best = k;
                    best_norm = nk;
                }
            }
            let v = cands[best].unscale(best_norm);
            for c in cands.iter_mut() {
                let proj = v.dotc(c);
                *c -= &v * proj;
            }
            u.set_column(pos, &v);
        }
    }
    let u = UnitaryMatrix::new(u)?;
    Ok((u, d))
}
