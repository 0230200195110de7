//! Predicates on Hermitian structures, built from the engine caches.
//!
//! Every predicate returns a [`Check`]: a flag and the residual that backs it.
//! Residuals are ℓ² norms over all frame components, so they do not depend on
//! the unitary frame the structure is written in. A residual below `tol`
//! gives `true`, one at or above `10·tol` gives `false`, and anything in
//! between is reported as [`Error::Indeterminate`].

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::CatalogEntry;
use crate::engine::{covariant_derivative, Engine};
use crate::error::{Error, Result};
use crate::forms::{dbar_del_split, ddbar, omega, power, wedge, StructureEquations};
use crate::tensor::{unitary_diagonalize_normal, CMatrix, Cx, DenseTensor, UnitaryMatrix, ONE, ZERO};

/// Width of the ambiguous band: `tol ≤ r < BAND·tol` is indeterminate.
pub const BAND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub flag: bool,
    pub residual: f64,
}

/// Two-band verdict on a residual.
pub fn decide(what: &str, residual: f64, tol: f64) -> Result<bool> {
    if !residual.is_finite() {
        return Err(Error::NotFinite("residual"));
    }
    if residual < tol {
        Ok(true)
    } else if residual >= BAND * tol {
        Ok(false)
    } else {
        Err(Error::Indeterminate(format!(
            "{what}: residual {residual:e} lies in [{tol:e}, {:e})",
            BAND * tol
        )))
    }
}

fn check(what: &str, residual: f64, tol: f64) -> Result<Check> {
    Ok(Check { flag: decide(what, residual, tol)?, residual })
}

fn fro(t: &DenseTensor) -> f64 {
    t.norm_sqr().sqrt()
}

fn hypot(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fro_m(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// BTP through ∇^b T^c = 0, over all components and both barred and unbarred directions.
pub fn is_btp_direct(e: &Engine, tol: f64) -> Result<Check> {
    check("btp", fro(e.torsion_derivative_bismut()), tol)
}

/// Largest component of ∇^b T^c as ([l, i, k, direction], value).
pub fn btp_witness(e: &Engine) -> (Vec<usize>, Cx) {
    let dt = e.torsion_derivative_bismut();
    let mut best = (vec![0; 4], ZERO);
    crate::tensor::for_each_index(dt.dims(), |ix| {
        let v = dt.at(ix);
        if v.norm() > best.1.norm() {
            best = (ix.to_vec(), v);
        }
    });
    best
}

/// The four curvature conditions equivalent to BTP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BtpCriteria {
    /// |R^b_{ijkl̄}|
    pub c1: f64,
    /// |R^b_{ij̄kl̄} − R^b_{kl̄ij̄}|
    pub c2: f64,
    /// |∇^b Ric(Q)|
    pub c3: f64,
    /// |Σ_i conj(η_i) Ric(Q)_{ij̄}|
    pub c4: f64,
    pub flag: bool,
}

pub fn btp_criteria(e: &Engine, tol: f64) -> Result<BtpCriteria> {
    let n = e.n();
    let rb = e.bismut_curvature();
    let c1 = fro(&rb.r20);
    let mut c2 = 0.0;
    crate::tensor::for_each_index(&[n; 4], |x| {
        c2 += (rb.r11.at(x) - rb.r11.at(&[x[2], x[3], x[0], x[1]])).norm_sqr();
    });
    let ric = &e.derived().ric_q;
    let c3 = fro(&covariant_derivative(e.bismut(), ric)?);
    let eta = e.eta();
    let c4 = (0..n)
        .map(|j| (0..n).map(|i| eta[i].conj() * ric.at(&[i, j])).sum::<Cx>().norm_sqr())
        .sum::<f64>()
        .sqrt();
    let (c2, c4) = (c2.sqrt(), c4);
    let flag = decide("btp_criteria", c1.max(c2).max(c3).max(c4), tol)?;
    Ok(BtpCriteria { c1, c2, c3, c4, flag })
}

/// Names reported by [`torsion_identities`].
pub const TORSION_IDENTITY_NAMES: [&str; 17] = [
    "commutator_a_b",
    "commutator_a_phi",
    "commutator_a_phi_star",
    "commutator_b_phi",
    "commutator_b_phi_star",
    "commutator_phi_phi_star",
    "curvature_difference",
    "dbar_eta",
    "del_eta",
    "eta_torsion_contraction",
    "parallel_q",
    "phi_a_phi_b",
    "phi_torsion",
    "q_from_torsion",
    "ricq_formula",
    "torsion_a_b_trace",
    "torsion_jacobi",
];

/// Algebraic consequences of torsion parallelism, as name → max residual.
/// Fails with `PreconditionFailed` unless the structure is BTP.
pub fn torsion_identities(e: &Engine, tol: f64) -> Result<BTreeMap<String, f64>> {
    let btp = is_btp_direct(e, tol)?;
    if !btp.flag {
        return Err(Error::PreconditionFailed(format!(
            "torsion identities need a BTP structure (|∇^b T| = {:e})",
            btp.residual
        )));
    }
    let n = e.n();
    let t = |k: usize, i: usize, j: usize| e.torsion().get(k, i, j);
    let tc = |k: usize, i: usize, j: usize| e.torsion().get(k, i, j).conj();
    let dv = e.derived();
    let sum = |f: &dyn Fn(usize) -> Cx| (0..n).map(f).sum::<Cx>();
    let mat = |t: &DenseTensor| CMatrix::from_fn(n, n, |i, j| t.at(&[i, j]));
    let (a, b, phi) = (mat(&dv.a), mat(&dv.b), mat(&dv.phi));
    let phi_star = phi.adjoint();
    let rb = &e.bismut_curvature().r11;
    let rc = &e.chern_curvature().r11;

    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let mut put = |name: &str, v: f64| {
        let e = out.entry(name.to_string()).or_insert(0.0);
        *e = e.max(v);
    };

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = sum(&|r| t(r, i, j) * t(l, r, k) + t(r, j, k) * t(l, r, i) + t(r, k, i) * t(l, r, j));
                    put("torsion_jacobi", v.norm());

                    let q = sum(&|r| {
                        t(j, k, r) * tc(i, l, r) + t(l, i, r) * tc(k, j, r)
                            - t(j, i, r) * tc(k, l, r)
                            - t(l, k, r) * tc(i, j, r)
                            - t(r, i, k) * tc(r, j, l)
                    });
                    put("q_from_torsion", (dv.q.at(&[i, j, k, l]) - q).norm());

                    let diff = sum(&|r| {
                        t(l, i, r) * tc(k, j, r) - t(r, i, k) * tc(r, j, l) - t(j, i, r) * tc(k, l, r)
                            - t(l, k, r) * tc(i, j, r)
                    });
                    put("curvature_difference", (rb.at(&[i, j, k, l]) - rc.at(&[i, j, k, l]) - diff).norm());
                }
                // φ^r_i = phi[i][r]
                let v = sum(&|r| phi[(i, r)] * t(j, r, k) + phi[(k, r)] * t(j, i, r) - phi[(r, j)] * t(r, i, k));
                put("phi_torsion", v.norm());
            }
            put("eta_torsion_contraction", sum(&|r| dv.eta.at(&[r]) * t(r, i, j)).norm());
        }
        let v = sum(&|r| sum(&|s| t(r, s, i) * (a[(r, s)] * 2.0 - b[(r, s)])));
        put("torsion_a_b_trace", v.norm());
    }
    let comm = |x: &CMatrix, y: &CMatrix| crate::tensor::max_abs_matrix(&(x * y - y * x));
    put("commutator_a_b", comm(&a, &b));
    put("commutator_a_phi", comm(&a, &phi));
    put("commutator_a_phi_star", comm(&a, &phi_star));
    put("commutator_b_phi", comm(&b, &phi));
    put("commutator_b_phi_star", comm(&b, &phi_star));
    put("commutator_phi_phi_star", comm(&phi, &phi_star));
    // φA = Σ φ^i_j A_{ij̄}
    let pa = sum(&|i| sum(&|j| phi[(j, i)] * a[(i, j)]));
    let pb = sum(&|i| sum(&|j| phi[(j, i)] * b[(i, j)]));
    put("phi_a_phi_b", (pa * 2.0 - pb).norm());
    put("parallel_q", covariant_derivative(e.bismut(), &dv.q)?.max_abs());
    put("ricq_formula", dv.ric_q_formula_residual);
    let (del, dbar) = crate::engine::eta_differential_residuals(e)?;
    put("del_eta", del);
    put("dbar_eta", dbar);
    Ok(out)
}

/// A unitary frame adapted to a non-balanced BTP structure.
#[derive(Clone, Debug)]
pub struct AdmissibleFrameData {
    /// Frame change e' = U e into the admissible frame.
    pub u: UnitaryMatrix,
    /// |η|
    pub lambda: f64,
    /// Eigenvalue data a_1, …, a_n with a_n = 0.
    pub a: Vec<Cx>,
    /// Engine of the structure rewritten in the admissible frame.
    pub engine: Engine,
}

impl AdmissibleFrameData {
    /// Defect of each defining property, measured in the admissible frame.
    pub fn invariant_residuals(&self) -> BTreeMap<String, f64> {
        let e = &self.engine;
        let n = e.n();
        let t = |k: usize, i: usize, j: usize| e.torsion().get(k, i, j);
        let eta = e.eta();
        let eta_res = eta[..n - 1].iter().fold((eta[n - 1] - self.lambda).norm(), |m, z| m.max(z.norm()));
        let (mut tn, mut tjn, mut rel) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                tn = tn.max(t(n - 1, i, j).norm());
                let want = if i == j { self.a[i] } else { ZERO };
                tjn = tjn.max((t(j, i, n - 1) - want).norm());
                for k in 0..n {
                    rel = rel.max(((self.a[i] + self.a[k] - self.a[j]) * t(j, i, k)).norm());
                }
            }
        }
        let trace = (self.a[..n - 1].iter().sum::<Cx>() - self.lambda).norm();
        [
            ("eta_along_last", eta_res),
            ("last_torsion_row", tn),
            ("torsion_last_column", tjn),
            ("eigenvalue_sum", trace),
            ("eigenvalue_relation", rel),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Unitary whose last row is the unit vector `v`, completed by pivoted Gram–Schmidt.
fn completion_with_last_row(v: &[Cx]) -> Result<UnitaryMatrix> {
    let n = v.len();
    let mut rows: Vec<Vec<Cx>> = vec![v.to_vec()];
    let project = |rows: &[Vec<Cx>], k: usize| {
        let mut w = vec![ZERO; n];
        w[k] = ONE;
        for r in rows {
            let p: Cx = r.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(r).for_each(|(x, a)| *x -= p * a);
        }
        w
    };
    while rows.len() < n {
        let mut best: Option<(f64, Vec<Cx>)> = None;
        for k in 0..n {
            let w = project(&rows, k);
            let nr = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| nr > *b + 1e-12) {
                best = Some((nr, w));
            }
        }
        let (nr, w) = best.expect("n > 0");
        let w = w.iter().map(|x| x / nr).collect::<Vec<_>>();
        rows.push(w);
    }
    rows.rotate_left(1);
    UnitaryMatrix::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Rotates η onto φ_n and diagonalizes φ on the complement.
pub fn admissible_frame(e: &Engine, tol: f64) -> Result<AdmissibleFrameData> {
    let lambda = e.eta_norm();
    if decide("balanced", lambda, tol)? {
        return Err(Error::Balanced { norm: lambda });
    }
    let btp = is_btp_direct(e, tol)?;
    if !btp.flag {
        return Err(Error::NotBtp { residual: btp.residual });
    }
    let n = e.n();
    let v: Vec<Cx> = e.eta().iter().map(|z| z.conj() / lambda).collect();
    let u1 = completion_with_last_row(&v)?;
    let s1 = e.structure().change_frame(&u1)?;
    let e1 = Engine::new(&s1)?;
    let phi = &e1.derived().phi;
    let block = CMatrix::from_fn(n - 1, n - 1, |i, j| phi.at(&[i, j]));
    let (w, _) = unitary_diagonalize_normal(&block, tol)?;
    let mut w2 = CMatrix::identity(n, n);
    w2.view_mut((0, 0), (n - 1, n - 1)).copy_from(&w.adjoint().matrix().clone());
    let u = UnitaryMatrix::new(w2)?.mul(&u1);
    let engine = Engine::new(&e.structure().change_frame(&u)?)?;
    let phi = &engine.derived().phi;
    let mut a: Vec<Cx> = (0..n - 1).map(|i| phi.at(&[i, i]) / lambda).collect();
    a.push(ZERO);
    Ok(AdmissibleFrameData { u, lambda, a, engine })
}

/// BKL: R^b_{ijkl̄} = 0 and Q = 0.
pub fn is_bkl(e: &Engine, tol: f64) -> Result<Check> {
    check("bkl", hypot(&[fro(&e.bismut_curvature().r20), fro(&e.derived().q)]), tol)
}

/// LCB: d(η + η̄) = 0.
pub fn is_lcb(e: &Engine, tol: f64) -> Result<Check> {
    let eta = e.eta_form();
    let re = eta.add(&eta.conj())?;
    check("lcb", crate::forms::d(e.structure(), &re)?.norm(), tol)
}

/// Defect of the LCK torsion shape T^j_{ik} = (η_k δ_ij − η_i δ_kj)/(n−1).
pub fn lck_torsion_shape(e: &Engine) -> f64 {
    let n = e.n();
    let eta = e.eta();
    let c = 1.0 / (n as f64 - 1.0);
    let mut r = 0.0;
    crate::tensor::for_each_index(&[n; 3], |x| {
        let (j, i, k) = (x[0], x[1], x[2]);
        let mut want = ZERO;
        if i == j {
            want += eta[k] * c;
        }
        if k == j {
            want -= eta[i] * c;
        }
        r += (e.torsion().get(j, i, k) - want).norm_sqr();
    });
    r.sqrt()
}

/// LCK: the torsion shape above together with LCB.
pub fn is_lck(e: &Engine, tol: f64) -> Result<Check> {
    let lcb = is_lcb(e, tol)?;
    check("lck", hypot(&[lck_torsion_shape(e), lcb.residual]), tol)
}

/// |∇ψ| for the Levi-Civita connection and ψ = −(η + η̄)/(n−1).
pub fn lee_form_lc_derivative(e: &Engine) -> f64 {
    let n = e.n();
    let (t1, t2) = e.levi_civita();
    let c = -1.0 / (n as f64 - 1.0);
    let p: Vec<Cx> = e.eta().iter().map(|z| z * c).collect();
    let q: Vec<Cx> = p.iter().map(|z| z.conj()).collect();
    let bar = |a: usize| if a < n { a + n } else { a - n };
    let mut r = 0.0;
    for a in 0..2 * n {
        for i in 0..n {
            let mut v1 = ZERO;
            let mut v2 = ZERO;
            for j in 0..n {
                v1 -= t1.coeff(i, j, a) * p[j] + t2.coeff(i, j, bar(a)).conj() * q[j];
                v2 -= t2.coeff(i, j, a) * p[j] + t1.coeff(i, j, bar(a)).conj() * q[j];
            }
            r += v1.norm_sqr() + v2.norm_sqr();
        }
    }
    r.sqrt()
}

/// Vaisman: LCK with Levi-Civita parallel Lee form.
pub fn is_vaisman(e: &Engine, tol: f64) -> Result<Check> {
    let lck = is_lck(e, tol)?;
    check("vaisman", hypot(&[lck.residual, lee_form_lc_derivative(e)]), tol)
}

/// Vaisman test through the admissible frame: a_1 = … = a_{n−1} = λ/(n−1).
pub fn vaisman_from_frame(f: &AdmissibleFrameData, tol: f64) -> Result<Check> {
    let n = f.a.len();
    let target = f.lambda / (n as f64 - 1.0);
    let r = f.a[..n - 1].iter().map(|a| (a - target).norm_sqr()).sum::<f64>().sqrt();
    check("vaisman", r, tol)
}

/// LP: ∂η = 0 and ∂ω = c·η∧∂η̄ for a constant c fitted by least squares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LpCheck {
    pub flag: bool,
    pub residual: f64,
    pub c: Cx,
}

pub fn is_lp(e: &Engine, tol: f64) -> Result<LpCheck> {
    let s = e.structure();
    let eta = e.eta_form();
    let (del_eta, _) = dbar_del_split(s, &eta)?;
    let (del_etabar, _) = dbar_del_split(s, &eta.conj())?;
    let v = wedge(&eta, &del_etabar)?;
    let (w, _) = dbar_del_split(s, &omega(s.n()))?;
    let vv = v.inner(&v).re;
    let c = if v.norm() < tol { ZERO } else { v.inner(&w) / vv };
    let fit = w.axpy(-c, &v)?.norm();
    let residual = hypot(&[del_eta.norm(), fit]);
    Ok(LpCheck { flag: decide("lp", residual, tol)?, residual, c })
}

/// In the admissible frame, T^j_{ik} = 0 whenever i, k < n.
pub fn has_degenerate_torsion(f: &AdmissibleFrameData, tol: f64) -> Result<Check> {
    let n = f.a.len();
    let mut r = 0.0;
    crate::tensor::for_each_index(&[n, n - 1, n - 1], |x| {
        r += f.engine.torsion().get(x[0], x[1], x[2]).norm_sqr();
    });
    check("degenerate_torsion", r.sqrt(), tol)
}

/// θ^b_{n·} and θ^b_{·n} in the admissible frame.
pub fn last_row_column(f: &AdmissibleFrameData) -> f64 {
    let e = &f.engine;
    let n = e.n();
    let mut r = 0.0;
    for j in 0..n {
        for a in 0..2 * n {
            r += e.bismut().coeff(n - 1, j, a).norm_sqr();
            if j + 1 < n {
                r += e.bismut().coeff(j, n - 1, a).norm_sqr();
            }
        }
    }
    r.sqrt()
}

/// ∇^c_{X̄} χ for X over the frame.
pub fn chi_antiholomorphic_derivative(e: &Engine) -> Result<f64> {
    let n = e.n();
    let d = covariant_derivative(e.chern(), &e.derived().chi)?;
    Ok((0..n).flat_map(|k| (n..2 * n).map(move |a| (k, a))).map(|(k, a)| d.at(&[k, a]).norm_sqr()).sum::<f64>().sqrt())
}

/// The connection matrices θ^b(e_A) and curvature matrices Θ^b(e_A, e_B).
fn bismut_matrices(e: &Engine) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let n = e.n();
    let b = e.bismut();
    let theta: Vec<CMatrix> = (0..2 * n).map(|a| CMatrix::from_fn(n, n, |i, j| b.coeff(i, j, a))).collect();
    let curv = &e.bismut_curvature().theta;
    let mut big = Vec::with_capacity(4 * n * n);
    for a in 0..2 * n {
        for c in 0..2 * n {
            big.push(CMatrix::from_fn(n, n, |k, l| curv[k * n + l][(a, c)]));
        }
    }
    (theta, big)
}

/// Certificate that the Bismut holonomy is abelian: all θ^b(X) and Θ^b(X, Y)
/// commute, which holds exactly when some unitary frame diagonalizes them
/// simultaneously. The residual is the ℓ² norm of all pairwise commutators.
pub fn bismut_abelian_certificate(e: &Engine, tol: f64) -> Result<Check> {
    let (theta, curv) = bismut_matrices(e);
    let all: Vec<&CMatrix> = theta.iter().chain(curv.iter()).filter(|m| fro_m(m) > 0.0).collect();
    let mut r = 0.0;
    for (p, x) in all.iter().enumerate() {
        for y in &all[p + 1..] {
            r += fro_m(&(*x * *y - *y * *x)).powi(2);
        }
    }
    check("bismut_abelian_certificate", r.sqrt(), tol)
}

/// Off-diagonal θ^b and Θ^b in the admissible frame. Indices whose a_i agree
/// to `tol` form one block, inside which only the trace-free part counts.
pub fn admissible_off_diagonal(f: &AdmissibleFrameData, tol: f64) -> f64 {
    let n = f.a.len();
    let same = |i: usize, j: usize| (f.a[i] - f.a[j]).norm() < tol && (i + 1 < n) == (j + 1 < n);
    let (theta, curv) = bismut_matrices(&f.engine);
    let mut r = 0.0;
    for m in theta.iter().chain(curv.iter()) {
        for i in 0..n {
            for j in 0..n {
                if !same(i, j) {
                    r += m[(i, j)].norm_sqr();
                }
            }
        }
        // trace-free part of each block
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let block: Vec<usize> = (i..n).filter(|&j| same(i, j)).collect();
            block.iter().for_each(|&j| seen[j] = true);
            let mean = block.iter().map(|&j| m[(j, j)]).sum::<Cx>() / block.len() as f64;
            for &p in &block {
                for &q in &block {
                    let v = if p == q { m[(p, p)] - mean } else { m[(p, q)] };
                    r += v.norm_sqr();
                }
            }
        }
    }
    r.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThreefoldCase {
    Case1,
    Case2,
    Case3,
    NotApplicable,
}

impl std::fmt::Display for ThreefoldCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ThreefoldCase::Case1 => "Case1",
            ThreefoldCase::Case2 => "Case2",
            ThreefoldCase::Case3 => "Case3",
            ThreefoldCase::NotApplicable => "NotApplicable",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreefoldReport {
    pub case: ThreefoldCase,
    pub a1: Cx,
    pub a2: Cx,
    /// a_1 ā_2 + ā_1 a_2
    pub s: Cx,
    /// a_1 ā_2 − ā_1 a_2
    pub t: Cx,
}

/// Case label of the eigenvalue pair (a_1, a_2).
pub fn threefold_case_from(a1: Cx, a2: Cx, tol: f64) -> Result<ThreefoldReport> {
    let s = a1 * a2.conj() + a1.conj() * a2;
    let t = a1 * a2.conj() - a1.conj() * a2;
    let case = if decide("threefold s", s.norm(), tol)? {
        ThreefoldCase::Case1
    } else if decide("threefold t", t.norm(), tol)? {
        ThreefoldCase::Case3
    } else {
        ThreefoldCase::Case2
    };
    Ok(ThreefoldReport { case, a1, a2, s, t })
}

pub fn threefold_case(e: &Engine, tol: f64) -> Result<ThreefoldReport> {
    if e.n() != 3 {
        return Err(Error::NotApplicable(format!("threefold analysis needs n = 3, got {}", e.n())));
    }
    let f = match admissible_frame(e, tol) {
        Ok(f) => f,
        Err(Error::Balanced { norm }) => {
            return Err(Error::NotApplicable(format!("balanced structure (|η| = {norm:e})")))
        }
        Err(err) => return Err(err),
    };
    threefold_case_from(f.a[0], f.a[1], tol)
}

/// Every verdict on one structure, each with its residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub name: String,
    pub n: usize,
    pub tolerance: f64,
    pub kahler: bool,
    pub balanced: bool,
    pub gauduchon: bool,
    pub pluriclosed: bool,
    pub chern_flat: bool,
    pub btp_direct: bool,
    pub btp_criteria: bool,
    pub bkl: bool,
    pub vaisman: bool,
    pub lcb: bool,
    pub lck: bool,
    pub lp: bool,
    pub gce: bool,
    /// Defined only for non-balanced BTP structures.
    pub degenerate_torsion: Option<bool>,
    pub bismut_abelian_certificate: bool,
    pub ric_q_zero: bool,
    pub q_zero: bool,
    pub threefold_case: ThreefoldCase,
    pub eigenvalues: Option<Vec<Cx>>,
    pub residuals: BTreeMap<String, f64>,
}

impl ClassificationReport {
    /// Flag by name, including the `btp` and `q_nonzero` aliases used by catalog expectations.
    pub fn flag(&self, key: &str) -> Option<bool> {
        Some(match key {
            "kahler" => self.kahler,
            "balanced" => self.balanced,
            "gauduchon" => self.gauduchon,
            "pluriclosed" => self.pluriclosed,
            "chern_flat" => self.chern_flat,
            "btp" | "btp_direct" => self.btp_direct,
            "btp_criteria" => self.btp_criteria,
            "bkl" => self.bkl,
            "vaisman" => self.vaisman,
            "lcb" => self.lcb,
            "lck" => self.lck,
            "lp" => self.lp,
            "gce" => self.gce,
            "degenerate_torsion" => return self.degenerate_torsion,
            "bismut_abelian_certificate" => self.bismut_abelian_certificate,
            "ric_q_zero" => self.ric_q_zero,
            "q_zero" => self.q_zero,
            "q_nonzero" => !self.q_zero,
            _ => return None,
        })
    }

    /// Every flag that is defined, keyed by name.
    pub fn flags(&self) -> BTreeMap<String, bool> {
        FLAG_NAMES.iter().filter_map(|k| self.flag(k).map(|v| (k.to_string(), v))).collect()
    }
}

pub const FLAG_NAMES: [&str; 19] = [
    "kahler",
    "balanced",
    "gauduchon",
    "pluriclosed",
    "chern_flat",
    "btp_direct",
    "btp_criteria",
    "bkl",
    "vaisman",
    "lcb",
    "lck",
    "lp",
    "gce",
    "degenerate_torsion",
    "bismut_abelian_certificate",
    "ric_q_zero",
    "q_zero",
    "q_nonzero",
    "btp",
];

pub fn classify_engine(e: &Engine, tol: f64) -> Result<ClassificationReport> {
    let s = e.structure();
    let n = e.n();
    let mut res = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        res.insert(k.to_string(), v.abs());
    };

    let torsion = fro(e.torsion().tensor());
    let kahler = decide("kahler", torsion, tol)?;
    put("kahler", torsion);
    let balanced = decide("balanced", e.eta_norm(), tol)?;
    put("balanced", e.eta_norm());
    let g = ddbar(s, &power(&omega(n), n - 1)?)?.norm();
    put("gauduchon", g);
    let p = ddbar(s, &omega(n))?.norm();
    put("pluriclosed", p);
    let cc = e.chern_curvature().theta.iter().map(|m| fro_m(m).powi(2)).sum::<f64>().sqrt();
    put("chern_flat", cc);
    let btp = is_btp_direct(e, tol)?;
    put("btp_direct", btp.residual);
    let crit = btp_criteria(e, tol)?;
    put("btp_criteria.c1", crit.c1);
    put("btp_criteria.c2", crit.c2);
    put("btp_criteria.c3", crit.c3);
    put("btp_criteria.c4", crit.c4);
    let bkl = is_bkl(e, tol)?;
    put("bkl", bkl.residual);
    let lcb = is_lcb(e, tol)?;
    put("lcb", lcb.residual);
    let lck = is_lck(e, tol)?;
    put("lck", lck.residual);
    let vaisman = is_vaisman(e, tol)?;
    put("vaisman", vaisman.residual);
    let lp = is_lp(e, tol)?;
    put("lp", lp.residual);
    let cert = bismut_abelian_certificate(e, tol)?;
    put("bismut_abelian_certificate", cert.residual);
    let ric = fro(&e.derived().ric_q);
    put("ric_q_zero", ric);
    let q = fro(&e.derived().q);
    put("q_zero", q);

    let mut degenerate_torsion = None;
    let mut threefold = ThreefoldCase::NotApplicable;
    let mut eigenvalues = None;
    if btp.flag && !balanced {
        let f = admissible_frame(e, tol)?;
        let deg = has_degenerate_torsion(&f, tol)?;
        put("degenerate_torsion", deg.residual);
        degenerate_torsion = Some(deg.flag);
        put("vaisman_from_frame", vaisman_from_frame(&f, tol)?.residual);
        put("bismut_last_row_column", last_row_column(&f));
        put("admissible_off_diagonal", admissible_off_diagonal(&f, tol));
        put("chi_holomorphic", chi_antiholomorphic_derivative(e)?);
        let inv = f.invariant_residuals();
        put("admissible_frame", inv.values().fold(0.0, |m, v| m.max(*v)));
        if n == 3 {
            let r = threefold_case_from(f.a[0], f.a[1], tol)?;
            put("threefold_s", r.s.norm());
            put("threefold_t", r.t.norm());
            threefold = r.case;
        }
        eigenvalues = Some(f.a);
    }

    Ok(ClassificationReport {
        name: s.name().to_string(),
        n,
        tolerance: tol,
        kahler,
        balanced,
        gauduchon: decide("gauduchon", g, tol)?,
        pluriclosed: decide("pluriclosed", p, tol)?,
        chern_flat: decide("chern_flat", cc, tol)?,
        btp_direct: btp.flag,
        btp_criteria: crit.flag,
        bkl: bkl.flag,
        vaisman: vaisman.flag,
        lcb: lcb.flag,
        lck: lck.flag,
        lp: lp.flag,
        gce: lp.flag && btp.flag,
        degenerate_torsion,
        bismut_abelian_certificate: cert.flag,
        ric_q_zero: decide("ric_q_zero", ric, tol)?,
        q_zero: decide("q_zero", q, tol)?,
        threefold_case: threefold,
        eigenvalues,
        residuals: res,
    })
}

pub fn classify(s: &StructureEquations, tol: f64) -> Result<ClassificationReport> {
    classify_engine(&Engine::new(s)?, tol)
}

/// One row of [`corollary_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub name: String,
    pub btp: bool,
    pub pluriclosed: bool,
    pub bkl: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub violations: usize,
}

/// Checks BKL ⇔ (BTP ∧ pluriclosed) entry by entry.
pub fn corollary_sweep<'a>(entries: impl IntoIterator<Item = &'a StructureEquations>, tol: f64) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for s in entries {
        let e = Engine::new(s)?;
        let btp = is_btp_direct(&e, tol)?.flag;
        let pluriclosed = decide("pluriclosed", ddbar(s, &omega(s.n()))?.norm(), tol)?;
        let bkl = is_bkl(&e, tol)?.flag;
        rows.push(SweepRow { name: s.name().to_string(), btp, pluriclosed, bkl, consistent: (btp && pluriclosed) == bkl });
    }
    let violations = rows.iter().filter(|r| !r.consistent).count();
    Ok(SweepReport { rows, violations })
}

/// [`corollary_sweep`] over catalog entries.
pub fn catalog_sweep(entries: &[CatalogEntry], tol: f64) -> Result<SweepReport> {
    corollary_sweep(entries.iter().map(|e| &e.s), tol)
}
