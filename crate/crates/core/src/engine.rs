//! Chern, Bismut and Levi-Civita connections of a left-invariant Hermitian
//! structure, with torsion, curvature and the tensors built from them.
//!
//! Conventions (the metric is the identity in the working unitary frame):
//!
//! | quantity | definition |
//! |---|---|
//! | connection | ∇e_i = Σ_j θ_ij e_j, stored as w[i][j][a] = θ_ij(e_a), a over e_1..e_n, ē_1..ē_n |
//! | structure equation | dφ = −ᵗθ∧φ + τ, τ of type (2,0) |
//! | torsion | τ_k = ½ Σ T^k_ij φ_i∧φ_j, stored T[k][i][j] |
//! | curvature | Θ = dθ − θ∧θ |
//! | R11[i][j][k][l] | R_{i j̄ k l̄} = Θ_kl(e_i, ē_j) |
//! | R20[i][j][k][l] | R_{i j k l̄} = Θ_kl(e_i, e_j) |
//! | γ | γ_ij = Σ_k (T^j_ik φ_k − conj(T^i_jk) φ̄_k), θ^b = θ + γ |
//! | Levi-Civita | θ_1 = θ + ½γ, (θ_2)_ij = ½ Σ_k conj(T^k_ij) φ_k |
//!
//! Derivative slots appended by [`covariant_derivative`] run over
//! e_1..e_n, ē_1..ē_n, so T^l_{kj,i} is `dt.at(&[l, k, j, i])` and
//! T^j_{ik,l̄} is `dt.at(&[j, i, k, n + l])`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{d1, dbar_del_split, omega, wedge11, InvariantForm, StructureEquations};
use crate::tensor::{CMatrix, Cx, DenseTensor, IndexKind, Symmetry, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Chern,
    Bismut,
    LeviCivitaTheta1,
    LeviCivitaTheta2,
    /// θ + tγ on the line through the Chern and Bismut connections.
    Gauduchon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionMatrix {
    n: usize,
    kind: ConnectionKind,
    w: Vec<Cx>,
}

impl ConnectionMatrix {
    fn zeros(n: usize, kind: ConnectionKind) -> Self {
        ConnectionMatrix { n, kind, w: vec![ZERO; n * n * 2 * n] }
    }
    #[inline]
    fn at(&self, i: usize, j: usize, a: usize) -> usize {
        (i * self.n + j) * 2 * self.n + a
    }
    /// θ_ij(e_a), with a ≥ n meaning ē_{a−n}.
    #[inline]
    pub fn coeff(&self, i: usize, j: usize, a: usize) -> Cx {
        self.w[self.at(i, j, a)]
    }
    fn row(&self, i: usize, j: usize) -> &[Cx] {
        let s = self.at(i, j, 0);
        &self.w[s..s + 2 * self.n]
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }
    pub fn entry(&self, i: usize, j: usize) -> InvariantForm {
        InvariantForm::from_one_form(self.n, self.row(i, j))
    }
    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max over coefficients of |θ_ij + conj(θ_ji)|.
    pub fn skew_hermitian_residual(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for a in 0..2 * n {
                    let abar = if a < n { a + n } else { a - n };
                    m = m.max((self.coeff(i, j, a) + self.coeff(j, i, abar).conj()).norm());
                }
            }
        }
        m
    }

    /// max of |θ_ij + θ_ji| and of the (0,1) coefficients.
    pub fn skew_symmetric_10_residual(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for a in 0..2 * n {
                    m = m.max((self.coeff(i, j, a) + self.coeff(j, i, a)).norm());
                    if a >= n {
                        m = m.max(self.coeff(i, j, a).norm());
                    }
                }
            }
        }
        m
    }

    /// Connection on the complexified frame (e, ē): diag(θ, conj θ), 2n×2n×2n.
    fn complexified(&self) -> Vec<Cx> {
        let n = self.n;
        let nn = 2 * n;
        let mut w = vec![ZERO; nn * nn * nn];
        for i in 0..n {
            for j in 0..n {
                for a in 0..nn {
                    let abar = if a < n { a + n } else { a - n };
                    w[(i * nn + j) * nn + a] = self.coeff(i, j, a);
                    w[((n + i) * nn + n + j) * nn + a] = self.coeff(i, j, abar).conj();
                }
            }
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionTensor {
    t: DenseTensor,
}

impl TorsionTensor {
    /// T^k_ij
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> Cx {
        self.t.at(&[k, i, j])
    }
    pub fn n(&self) -> usize {
        self.t.dims()[0]
    }
    pub fn tensor(&self) -> &DenseTensor {
        &self.t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    pub kind: ConnectionKind,
    /// R_{i j̄ k l̄}
    pub r11: DenseTensor,
    /// R_{i j k l̄}
    pub r20: DenseTensor,
    /// Curvature 2-forms Θ_kl as 2n×2n matrices, row-major in (k, l).
    pub theta: Vec<CMatrix>,
    /// max |Θ_kl(ē_i, ē_j) + conj(R20[i][j][l][k])|
    pub r02_pairing_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedTensors {
    pub a: DenseTensor,
    pub b: DenseTensor,
    pub c: DenseTensor,
    /// phi[i][j] = φ^j_i
    pub phi: DenseTensor,
    pub phi_star: DenseTensor,
    pub q: DenseTensor,
    /// p[i][k][j][l] = P^{jl}_{ik}
    pub p: DenseTensor,
    pub ric_q: DenseTensor,
    pub eta: DenseTensor,
    pub chi: DenseTensor,
    /// max |Ric(Q) − (B − φ − φ*)|, computed from both sides.
    pub ric_q_formula_residual: f64,
}

/// Per-structure cache of every connection-level quantity.
#[derive(Clone, Debug)]
pub struct Engine {
    s: StructureEquations,
    chern: ConnectionMatrix,
    gamma: ConnectionMatrix,
    bismut: ConnectionMatrix,
    theta1: ConnectionMatrix,
    theta2: ConnectionMatrix,
    torsion: TorsionTensor,
    chern_type_residual: f64,
    levi_civita_residual: f64,
    chern_curv: CurvatureTensor,
    bismut_curv: CurvatureTensor,
    dt_bismut: DenseTensor,
    dt_chern: DenseTensor,
    derived: DerivedTensors,
}

fn chern_matrix(s: &StructureEquations) -> ConnectionMatrix {
    let n = s.n();
    let mut th = ConnectionMatrix::zeros(n, ConnectionKind::Chern);
    for j in 0..n {
        for k in 0..n {
            for m in 0..n {
                let p = th.at(j, k, n + m);
                th.w[p] = s.f(k, j, m);
                let q = th.at(j, k, m);
                th.w[q] = -s.f(j, k, m).conj();
            }
        }
    }
    th
}

fn unit(n: usize, a: usize) -> Vec<Cx> {
    let mut v = vec![ZERO; 2 * n];
    v[a] = Cx::new(1.0, 0.0);
    v
}

fn curvature_of(s: &StructureEquations, th: &ConnectionMatrix) -> CurvatureTensor {
    let n = s.n();
    let mut theta = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut m = d1(s, th.row(i, j));
            for k in 0..n {
                m -= wedge11(th.row(i, k), th.row(k, j));
            }
            theta.push(m);
        }
    }
    let kinds11 = [IndexKind::Lower, IndexKind::LowerBar, IndexKind::Lower, IndexKind::LowerBar];
    let kinds20 = [IndexKind::Lower, IndexKind::Lower, IndexKind::Lower, IndexKind::LowerBar];
    let r11 = DenseTensor::from_fn(&[n; 4], &kinds11, |x| theta[x[2] * n + x[3]][(x[0], n + x[1])]).unwrap();
    let r20 = DenseTensor::from_fn(&[n; 4], &kinds20, |x| theta[x[2] * n + x[3]][(x[0], x[1])]).unwrap();
    let mut pair = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = theta[k * n + l][(n + i, n + j)] + r20.at(&[i, j, l, k]).conj();
                    pair = pair.max(v.norm());
                }
            }
        }
    }
    CurvatureTensor { kind: th.kind, r11, r20, theta, r02_pairing_residual: pair }
}

/// ∇ of an invariant tensor along every direction; see the module table.
fn cov_raw(w: &[Cx], nn: usize, t: &DenseTensor) -> DenseTensor {
    // w is m×m×nn with m the tensor extent
    let m = t.dims()[0];
    let mut dims = t.dims().to_vec();
    dims.push(nn);
    let mut kinds = t.kinds().to_vec();
    kinds.push(IndexKind::Direction);
    let wi = |i: usize, j: usize, a: usize| w[(i * m + j) * nn + a];
    let rank = t.rank();
    let mut scratch = vec![0usize; rank];
    let mut data = Vec::with_capacity(dims.iter().product());
    crate::tensor::for_each_index(&dims, |ix| {
        let a = ix[rank];
        scratch.copy_from_slice(&ix[..rank]);
        let mut acc = ZERO;
        for p in 0..rank {
            let orig = ix[p];
            for q in 0..m {
                scratch[p] = q;
                let v = t.at(&scratch);
                if v == ZERO {
                    continue;
                }
                match t.kinds()[p] {
                    IndexKind::Lower => acc -= v * wi(orig, q, a),
                    _ => acc += v * wi(q, orig, a),
                }
            }
            scratch[p] = orig;
        }
        data.push(acc);
    });
    DenseTensor::from_vec_wide(&dims, &kinds, data)
}

/// Covariant derivative of an invariant tensor whose slots all have extent n.
///
/// The connection must be metric (skew-Hermitian), which is what lets a
/// lower-barred slot transform like an upper one.
pub fn covariant_derivative(conn: &ConnectionMatrix, t: &DenseTensor) -> Result<DenseTensor> {
    let n = conn.n;
    if t.dims().iter().any(|&d| d != n) || t.kinds().contains(&IndexKind::Direction) {
        return Err(Error::DimensionMismatch(format!(
            "tensor extents {:?} for a connection with n = {n}",
            t.dims()
        )));
    }
    if t.rank() == 0 {
        return Err(Error::DimensionMismatch("scalar tensor".into()));
    }
    Ok(cov_raw(&conn.w, 2 * n, t))
}

fn matrix_tensor(n: usize, kinds: [IndexKind; 2], f: impl Fn(usize, usize) -> Cx) -> DenseTensor {
    DenseTensor::from_fn(&[n, n], &kinds, |x| f(x[0], x[1])).unwrap()
}

impl Engine {
    pub fn new(s: &StructureEquations) -> Result<Engine> {
        s.ensure_complex()?;
        let n = s.n();
        let nn = 2 * n;
        let chern = chern_matrix(s);

        // τ_k = dφ_k + Σ_j θ_jk∧φ_j
        let mut t = vec![ZERO; n * n * n];
        let mut chern_type_residual = 0.0f64;
        for k in 0..n {
            let mut tau = s.d_generator(k).clone();
            for j in 0..n {
                tau += wedge11(chern.row(j, k), &unit(n, j));
            }
            for a in 0..nn {
                for b in 0..nn {
                    if a >= n || b >= n {
                        chern_type_residual = chern_type_residual.max(tau[(a, b)].norm());
                    } else {
                        t[(k * n + a) * n + b] = tau[(a, b)];
                    }
                }
            }
        }
        let kinds = [IndexKind::Upper, IndexKind::Lower, IndexKind::Lower];
        let t = DenseTensor::from_vec(&[n, n, n], &kinds, t)?.with_symmetry(Symmetry::Antisymmetric(1, 2))?;
        let torsion = TorsionTensor { t };
        let tt = |k: usize, i: usize, j: usize| torsion.get(k, i, j);

        let mut gamma = ConnectionMatrix::zeros(n, ConnectionKind::Bismut);
        let mut theta2 = ConnectionMatrix::zeros(n, ConnectionKind::LeviCivitaTheta2);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let p = gamma.at(i, j, k);
                    gamma.w[p] = tt(j, i, k);
                    let p = gamma.at(i, j, n + k);
                    gamma.w[p] = -tt(i, j, k).conj();
                    let p = theta2.at(i, j, k);
                    theta2.w[p] = tt(k, i, j).conj() * 0.5;
                }
            }
        }
        let combine = |t: f64, kind| {
            let mut c = chern.clone();
            c.kind = kind;
            c.w.iter_mut().zip(&gamma.w).for_each(|(x, g)| *x += g * t);
            c
        };
        let bismut = combine(1.0, ConnectionKind::Bismut);
        let theta1 = combine(0.5, ConnectionKind::LeviCivitaTheta1);

        let mut levi_civita_residual = 0.0f64;
        for k in 0..n {
            let mut m = s.d_generator(k).clone();
            for j in 0..n {
                m += wedge11(theta1.row(j, k), &unit(n, j));
                m += wedge11(theta2.row(j, k), &unit(n, n + j));
            }
            levi_civita_residual = levi_civita_residual.max(crate::tensor::max_abs_matrix(&m));
        }

        let chern_curv = curvature_of(s, &chern);
        let bismut_curv = curvature_of(s, &bismut);
        let dt_bismut = cov_raw(&bismut.w, nn, &torsion.t);
        let dt_chern = cov_raw(&chern.w, nn, &torsion.t);
        let derived = derived_from(n, &torsion, &bismut_curv);
        Ok(Engine {
            s: s.clone(),
            chern,
            gamma,
            bismut,
            theta1,
            theta2,
            torsion,
            chern_type_residual,
            levi_civita_residual,
            chern_curv,
            bismut_curv,
            dt_bismut,
            dt_chern,
            derived,
        })
    }

    pub fn structure(&self) -> &StructureEquations {
        &self.s
    }
    pub fn n(&self) -> usize {
        self.s.n()
    }
    pub fn chern(&self) -> &ConnectionMatrix {
        &self.chern
    }
    pub fn gamma(&self) -> &ConnectionMatrix {
        &self.gamma
    }
    pub fn bismut(&self) -> &ConnectionMatrix {
        &self.bismut
    }
    pub fn levi_civita(&self) -> (&ConnectionMatrix, &ConnectionMatrix) {
        (&self.theta1, &self.theta2)
    }
    pub fn torsion(&self) -> &TorsionTensor {
        &self.torsion
    }
    pub fn chern_curvature(&self) -> &CurvatureTensor {
        &self.chern_curv
    }
    pub fn bismut_curvature(&self) -> &CurvatureTensor {
        &self.bismut_curv
    }
    pub fn derived(&self) -> &DerivedTensors {
        &self.derived
    }
    /// ∇^b T^c
    pub fn torsion_derivative_bismut(&self) -> &DenseTensor {
        &self.dt_bismut
    }
    /// ∇^c T^c
    pub fn torsion_derivative_chern(&self) -> &DenseTensor {
        &self.dt_chern
    }
    /// Size of the (1,1)+(0,2) part of dφ + ᵗθ∧φ; zero when θ is the Chern connection.
    pub fn chern_type_residual(&self) -> f64 {
        self.chern_type_residual
    }
    /// max |dφ_k + Σ_j (θ1_jk∧φ_j + θ2_jk∧φ̄_j)|
    pub fn levi_civita_residual(&self) -> f64 {
        self.levi_civita_residual
    }

    pub fn eta(&self) -> Vec<Cx> {
        (0..self.n()).map(|k| self.derived.eta.at(&[k])).collect()
    }

    pub fn eta_norm(&self) -> f64 {
        self.derived.eta.norm_sqr().sqrt()
    }

    /// η = Σ η_k φ_k as a form.
    pub fn eta_form(&self) -> InvariantForm {
        let n = self.n();
        let mut v = self.eta();
        v.extend(std::iter::repeat_n(ZERO, n));
        InvariantForm::from_one_form(n, &v)
    }

    /// Torsion of the Bismut connection on the complexified frame, slot
    /// layout [c][a][b] with T^b(e_a, e_b) = Σ_c Tb[c][a][b] e_c.
    pub(crate) fn bismut_torsion_full(&self) -> DenseTensor {
        let n = self.n();
        let nn = 2 * n;
        let t = |k, i, j| self.torsion.get(k, i, j);
        let mut data = vec![ZERO; nn * nn * nn];
        let mut put = |c: usize, a: usize, b: usize, v: Cx| {
            data[(c * nn + a) * nn + b] = v;
            data[(c * nn + b) * nn + a] = -v;
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    put(k, i, j, -t(k, i, j));
                    put(n + k, n + i, n + j, -t(k, i, j).conj());
                    put(n + k, i, n + j, t(j, i, k));
                    put(k, i, n + j, -t(i, j, k).conj());
                    // conjugate pair of the mixed slot
                    put(k, n + i, j, t(j, i, k).conj());
                    put(n + k, n + i, j, -t(i, j, k));
                }
            }
        }
        let kinds = [IndexKind::Upper, IndexKind::Lower, IndexKind::Lower];
        DenseTensor::from_vec_wide(&[nn, nn, nn], &kinds, data)
    }

    /// Chern torsion on the complexified frame (mixed slots vanish).
    pub(crate) fn chern_torsion_full(&self) -> DenseTensor {
        let n = self.n();
        let nn = 2 * n;
        let mut data = vec![ZERO; nn * nn * nn];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = self.torsion.get(k, i, j);
                    data[(k * nn + i) * nn + j] = v;
                    data[((n + k) * nn + n + i) * nn + n + j] = v.conj();
                }
            }
        }
        let kinds = [IndexKind::Upper, IndexKind::Lower, IndexKind::Lower];
        DenseTensor::from_vec_wide(&[nn, nn, nn], &kinds, data)
    }

    /// Connection θ + tγ; t = 0 is Chern, t = 1 Bismut, t = ½ the Hermitian part of Levi-Civita.
    pub fn gauduchon_connection(&self, t: f64) -> ConnectionMatrix {
        let mut c = self.chern.clone();
        c.kind = ConnectionKind::Gauduchon;
        c.w.iter_mut().zip(&self.gamma.w).for_each(|(x, g)| *x += g * t);
        c
    }

    /// max |∇^{t} T^{t'}| on the complexified frame, where ∇^t = ∇^c + tγ and
    /// T^{t'} = (1 − t') T^c + t' T^b.
    pub fn gauduchon_torsion_parallel(&self, t: f64, t_torsion: f64) -> f64 {
        let n = self.n();
        let nn = 2 * n;
        let tc = self.chern_torsion_full();
        let tb = self.bismut_torsion_full();
        let data: Vec<Cx> =
            tc.data().iter().zip(tb.data()).map(|(c, b)| c * (1.0 - t_torsion) + b * t_torsion).collect();
        let tt = DenseTensor::from_vec_wide(tc.dims(), tc.kinds(), data);
        let w = self.gauduchon_connection(t).complexified();
        cov_raw(&w, nn, &tt).max_abs()
    }

    /// max |∇^b T^b| with T^b written out on the complexified frame.
    pub fn bismut_torsion_parallel(&self) -> f64 {
        let nn = 2 * self.n();
        cov_raw(&self.bismut.complexified(), nn, &self.bismut_torsion_full()).max_abs()
    }

    /// Every identity that holds on all Hermitian structures, as name → max residual.
    pub fn identity_suite(&self) -> BTreeMap<String, f64> {
        identity_suite_impl(self)
    }

    /// Difference between √−1∂∂̄ω from the exterior calculus and the
    /// component formula ¼Σ{(T^l_{ik,j̄} − T^j_{ik,l̄}) − P^{jl}_{ik}} φ_iφ_kφ̄_jφ̄_l.
    pub fn pluriclosed_formula_crosscheck(&self) -> Result<f64> {
        let n = self.n();
        let w = omega(n);
        let (_, dbar) = dbar_del_split(&self.s, &w)?;
        let (ddbar, _) = dbar_del_split(&self.s, &dbar)?;
        let lhs = ddbar.scale(crate::tensor::I);
        let dt = &self.dt_bismut;
        let p = &self.derived.p;
        let mut items = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let c = (dt.at(&[l, i, k, n + j]) - dt.at(&[j, i, k, n + l]) - p.at(&[i, k, j, l])) * 0.25;
                        items.push((vec![i, k, n + j, n + l], c));
                    }
                }
            }
        }
        // compare coefficients directly so sub-threshold differences are not pruned away
        let mut diff: BTreeMap<Vec<usize>, Cx> = lhs.terms().collect();
        for (mut gens, c) in items {
            let (i, k, j, l) = (gens[0], gens[1], gens[2], gens[3]);
            if i == k || j == l {
                continue;
            }
            let sign = if (i > k) != (j > l) { -1.0 } else { 1.0 };
            gens = vec![i.min(k), i.max(k), j.min(l), j.max(l)];
            *diff.entry(gens).or_insert(ZERO) -= c * sign;
        }
        Ok(diff.values().fold(0.0, |m, z| m.max(z.norm())))
    }
}

fn derived_from(n: usize, torsion: &TorsionTensor, curv: &CurvatureTensor) -> DerivedTensors {
    use IndexKind::*;
    let t = |k: usize, i: usize, j: usize| torsion.get(k, i, j);
    let r = &curv.r11;
    let sum = |f: &dyn Fn(usize) -> Cx| (0..n).map(f).sum::<Cx>();
    let eta_v: Vec<Cx> = (0..n).map(|k| sum(&|i| t(i, i, k))).collect();
    let eta = DenseTensor::from_vec(&[n], &[Lower], eta_v.clone()).unwrap();
    let chi = DenseTensor::from_vec(&[n], &[Upper], eta_v.iter().map(|z| z.conj()).collect()).unwrap();
    let a = matrix_tensor(n, [Lower, LowerBar], |k, l| sum(&|r| sum(&|s| t(r, s, k) * t(r, s, l).conj())))
        .with_symmetry(Symmetry::Hermitian(0, 1))
        .unwrap();
    let b = matrix_tensor(n, [Lower, LowerBar], |k, l| sum(&|r| sum(&|s| t(l, r, s) * t(k, r, s).conj())))
        .with_symmetry(Symmetry::Hermitian(0, 1))
        .unwrap();
    let c = matrix_tensor(n, [Lower, Lower], |i, k| sum(&|r| sum(&|s| t(r, s, i) * t(s, r, k))));
    let phi = matrix_tensor(n, [Lower, Upper], |i, j| sum(&|r| t(j, i, r) * eta_v[r].conj()));
    let phi_star = matrix_tensor(n, [Upper, Lower], |i, j| phi.at(&[j, i]).conj());
    let q = DenseTensor::from_fn(&[n; 4], &[Lower, LowerBar, Lower, LowerBar], |x| {
        r.at(&[x[0], x[1], x[2], x[3]]) - r.at(&[x[2], x[1], x[0], x[3]])
    })
    .unwrap();
    let p = DenseTensor::from_fn(&[n; 4], &[Lower, Lower, LowerBar, LowerBar], |x| {
        let (i, k, j, l) = (x[0], x[1], x[2], x[3]);
        sum(&|r| {
            t(r, i, k) * t(r, j, l).conj() + t(j, i, r) * t(k, l, r).conj()
                - t(j, k, r) * t(i, l, r).conj()
                - t(l, i, r) * t(k, j, r).conj()
                + t(l, k, r) * t(i, j, r).conj()
        })
    })
    .unwrap();
    let ric_q = matrix_tensor(n, [Lower, LowerBar], |i, j| sum(&|s| r.at(&[i, j, s, s]) - r.at(&[s, j, i, s])));
    let mut ric_q_formula_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let rhs = b.at(&[i, j]) - phi.at(&[i, j]) - phi_star.at(&[i, j]);
            ric_q_formula_residual = ric_q_formula_residual.max((ric_q.at(&[i, j]) - rhs).norm());
        }
    }
    DerivedTensors { a, b, c, phi, phi_star, q, p, ric_q, eta, chi, ric_q_formula_residual }
}

fn identity_suite_impl(e: &Engine) -> BTreeMap<String, f64> {
    let n = e.n();
    let t = |k: usize, i: usize, j: usize| e.torsion.get(k, i, j);
    let tc = |k: usize, i: usize, j: usize| e.torsion.get(k, i, j).conj();
    let rb11 = &e.bismut_curv.r11;
    let rb20 = &e.bismut_curv.r20;
    let rc11 = &e.chern_curv.r11;
    let dt = &e.dt_bismut;
    let dtc = &e.dt_chern;
    let p = &e.derived.p;
    let sum = |f: &dyn Fn(usize) -> Cx| (0..n).map(f).sum::<Cx>();
    let cyc = |i: usize, j: usize, k: usize, l: usize| {
        sum(&|r| t(r, i, j) * t(l, r, k) + t(r, j, k) * t(l, r, i) + t(r, k, i) * t(l, r, j))
    };
    let mut out = BTreeMap::new();
    let mut put = |name: &str, v: f64| {
        let e = out.entry(name.to_string()).or_insert(0.0f64);
        *e = e.max(v);
    };

    let drb20 = cov_raw(&e.bismut.w, 2 * n, rb20);
    let drb11 = cov_raw(&e.bismut.w, 2 * n, rb11);
    let drc11 = cov_raw(&e.chern.w, 2 * n, rc11);
    let deta = cov_raw(&e.bismut.w, 2 * n, &e.derived.eta);
    let eta = |k: usize| e.derived.eta.at(&[k]);

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let rhs = dt.at(&[l, k, j, i]) - dt.at(&[l, k, i, j]) + cyc(i, j, k, l);
                    put("bismut_curvature_20", (rb20.at(&[i, j, k, l]) - rhs).norm());

                    let rhs = dt.at(&[l, i, k, n + j]) + dt.at(&[k, j, l, n + i]).conj()
                        - sum(&|r| {
                            t(l, k, r) * tc(i, j, r) + t(j, i, r) * tc(k, l, r) + t(r, i, k) * tc(r, j, l)
                                - t(l, i, r) * tc(k, j, r)
                        });
                    put("bismut_chern_curvature_11", (rb11.at(&[i, j, k, l]) - rc11.at(&[i, j, k, l]) - rhs).norm());

                    let lhs = dt.at(&[k, i, j, l]) + dt.at(&[k, j, l, i]) + dt.at(&[k, l, i, j]);
                    let rhs = sum(&|r| t(r, l, i) * t(k, r, j) + t(r, j, l) * t(k, r, i) + t(r, i, j) * t(k, r, l)) * 2.0;
                    put("torsion_derivative_cyclic", (lhs - rhs).norm());

                    let lhs = dt.at(&[j, i, k, n + l]) + dt.at(&[i, j, l, n + k]).conj() - dt.at(&[k, j, l, n + i]).conj();
                    let rhs = -p.at(&[i, k, j, l]) + rb11.at(&[i, l, k, j]) - rb11.at(&[k, l, i, j]);
                    put("torsion_derivative_bar", (lhs - rhs).norm());

                    let v = dt.at(&[l, i, j, k]) + rb20.at(&[j, k, i, l]) + rb20.at(&[k, i, j, l]);
                    put("torsion_derivative_refined", v.norm());

                    let v = cyc(i, j, k, l) + rb20.at(&[i, j, k, l]) + rb20.at(&[j, k, i, l]) + rb20.at(&[k, i, j, l]);
                    put("torsion_cyclic_sum", v.norm());

                    let rhs = -p.at(&[i, k, j, l]) / 3.0
                        + (rb11.at(&[i, l, k, j]) - rb11.at(&[k, l, i, j])) * (2.0 / 3.0)
                        + (rb11.at(&[i, j, k, l]) - rb11.at(&[k, j, i, l])) / 3.0;
                    put("torsion_derivative_bar_refined", (dt.at(&[j, i, k, n + l]) - rhs).norm());

                    let lhs = dtc.at(&[l, i, j, k]) + dtc.at(&[l, j, k, i]) + dtc.at(&[l, k, i, j]);
                    let rhs = sum(&|r| t(r, i, j) * t(l, k, r) + t(r, j, k) * t(l, i, r) + t(r, k, i) * t(l, j, r));
                    put("chern_first_bianchi_20", (lhs - rhs).norm());

                    let v = rc11.at(&[k, j, i, l]) - rc11.at(&[i, j, k, l]) - dtc.at(&[l, i, k, n + j]);
                    put("chern_first_bianchi_11", v.norm());

                    for m in 0..n {
                        let v = drc11.at(&[i, j, k, l, m]) - drc11.at(&[m, j, k, l, i])
                            - sum(&|r| t(r, i, m) * rc11.at(&[r, j, k, l]));
                        put("chern_second_bianchi", v.norm());

                        // (i, j, p=m) with curvature slots (k, l)
                        let lhs = drb20.at(&[i, j, k, l, m]) + drb20.at(&[m, i, k, l, j]) + drb20.at(&[j, m, k, l, i]);
                        let rhs = -sum(&|r| {
                            rb20.at(&[i, r, k, l]) * t(r, j, m)
                                + rb20.at(&[j, r, k, l]) * t(r, m, i)
                                + rb20.at(&[m, r, k, l]) * t(r, i, j)
                        });
                        put("bismut_curvature_derivative_30", (lhs - rhs).norm());

                        // (i, p=j, q=m) with curvature slots (k, l)
                        let lhs = drb20.at(&[i, j, k, l, n + m]) - drb11.at(&[i, m, k, l, j]) + drb11.at(&[j, m, k, l, i]);
                        let rhs = sum(&|r| {
                            rb11.at(&[r, m, k, l]) * t(r, i, j) - rb11.at(&[j, r, k, l]) * t(m, i, r)
                                + rb11.at(&[i, r, k, l]) * t(m, j, r)
                                + rb20.at(&[j, r, k, l]) * tc(i, m, r)
                                - rb20.at(&[i, r, k, l]) * tc(j, m, r)
                        });
                        put("bismut_curvature_derivative_21", (lhs - rhs).norm());
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let v = deta.at(&[i, j]) + sum(&|r| rb20.at(&[i, j, r, r]) + rb20.at(&[j, r, i, r]));
            put("eta_derivative", v.norm());
            let rhs = -(sum(&|r| eta(r) * tc(i, j, r) + eta(r).conj() * t(j, i, r))
                - sum(&|s| sum(&|r| t(j, s, r) * tc(i, s, r))))
                / 3.0
                + sum(&|r| rb11.at(&[r, j, i, r]) - rb11.at(&[i, j, r, r])) * (2.0 / 3.0)
                + sum(&|r| rb11.at(&[r, r, i, j]) - rb11.at(&[i, r, r, j])) / 3.0;
            put("eta_derivative_bar", (deta.at(&[i, n + j]) - rhs).norm());
        }
    }
    out
}

pub fn chern_connection(s: &StructureEquations) -> Result<ConnectionMatrix> {
    Ok(Engine::new(s)?.chern)
}

pub fn chern_torsion(s: &StructureEquations) -> Result<TorsionTensor> {
    Ok(Engine::new(s)?.torsion)
}

pub fn bismut_connection(s: &StructureEquations) -> Result<ConnectionMatrix> {
    Ok(Engine::new(s)?.bismut)
}

/// (θ_1, θ_2) with ∇e = θ_1 e + conj(θ_2) ē.
pub fn levi_civita(s: &StructureEquations) -> Result<(ConnectionMatrix, ConnectionMatrix)> {
    let e = Engine::new(s)?;
    Ok((e.theta1, e.theta2))
}

pub fn curvature(s: &StructureEquations, conn: &ConnectionMatrix) -> Result<CurvatureTensor> {
    s.ensure_complex()?;
    if conn.n != s.n() {
        return Err(Error::DimensionMismatch(format!("connection n = {} vs n = {}", conn.n, s.n())));
    }
    Ok(curvature_of(s, conn))
}

pub fn derived_tensors(s: &StructureEquations) -> Result<DerivedTensors> {
    Ok(Engine::new(s)?.derived)
}

pub fn identity_suite(s: &StructureEquations) -> Result<BTreeMap<String, f64>> {
    Ok(Engine::new(s)?.identity_suite())
}

pub fn pluriclosed_formula_crosscheck(s: &StructureEquations) -> Result<f64> {
    Engine::new(s)?.pluriclosed_formula_crosscheck()
}

/// Names reported by [`identity_suite`].
pub const IDENTITY_NAMES: [&str; 14] = [
    "bismut_chern_curvature_11",
    "bismut_curvature_20",
    "bismut_curvature_derivative_21",
    "bismut_curvature_derivative_30",
    "chern_first_bianchi_11",
    "chern_first_bianchi_20",
    "chern_second_bianchi",
    "eta_derivative",
    "eta_derivative_bar",
    "torsion_cyclic_sum",
    "torsion_derivative_bar",
    "torsion_derivative_bar_refined",
    "torsion_derivative_cyclic",
    "torsion_derivative_refined",
];

/// ∂η residual and ∂̄η against −Σ conj(φ^i_j) φ_i∧φ̄_j.
pub(crate) fn eta_differential_residuals(e: &Engine) -> Result<(f64, f64)> {
    let n = e.n();
    let (del, dbar) = dbar_del_split(e.structure(), &e.eta_form())?;
    let phi = &e.derived.phi;
    let mut items = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // φ^i_j = phi[j][i]
            items.push((vec![i, n + j], -phi.at(&[j, i]).conj()));
        }
    }
    let want = InvariantForm::from_monomials(n, 2, &items)?;
    Ok((del.max_abs(), dbar.sub(&want)?.max_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::{d, power};
    use crate::tensor::{cx, UnitaryMatrix};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Oracle {
        theta: Vec<Cx>,
        t: Vec<Cx>,
        residual: f64,
        min_singular: f64,
    }

    /// Solves dφ_k + Σ_j θ_jk∧φ_j ∈ Λ^{2,0}, θ skew-Hermitian, as a dense real
    /// least-squares problem in the coefficients θ_ij(ψ_a).
    fn chern_oracle(s: &StructureEquations) -> Oracle {
        let n = s.n();
        let nn = 2 * n;
        let m = n * n * nn;
        let idx = |i: usize, j: usize, a: usize| (i * n + j) * nn + a;
        let tau = |th: &[Cx], k: usize| -> CMatrix {
            let mut t = s.d_generator(k).clone();
            for j in 0..n {
                for a in 0..nn {
                    let c = th[idx(j, k, a)];
                    // (θ∧φ_j)(a, j) = c, (θ∧φ_j)(j, a) = −c
                    t[(a, j)] += c;
                    t[(j, a)] -= c;
                }
            }
            t
        };
        let residual = |th: &[Cx]| -> Vec<f64> {
            let mut r = Vec::new();
            for k in 0..n {
                let t = tau(th, k);
                for a in 0..nn {
                    for b in a + 1..nn {
                        if b >= n {
                            r.extend([t[(a, b)].re, t[(a, b)].im]);
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for a in 0..nn {
                        let abar = (a + n) % nn;
                        let v = th[idx(i, j, a)] + th[idx(j, i, abar)].conj();
                        r.extend([v.re, v.im]);
                    }
                }
            }
            r
        };
        let zero = vec![ZERO; m];
        let r0 = residual(&zero);
        let mut l = DMatrix::<f64>::zeros(r0.len(), 2 * m);
        for c in 0..2 * m {
            let mut th = zero.clone();
            th[c / 2] = if c % 2 == 0 { cx(1.0, 0.0) } else { cx(0.0, 1.0) };
            for (row, v) in residual(&th).iter().enumerate() {
                l[(row, c)] = v - r0[row];
            }
        }
        let svd = l.clone().svd(true, true);
        let min_singular = svd.singular_values.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let x = svd.solve(&(-DVector::from_vec(r0.clone())), 1e-12).unwrap();
        let theta: Vec<Cx> = (0..m).map(|p| cx(x[2 * p], x[2 * p + 1])).collect();
        let res = residual(&theta).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut t = vec![ZERO; n * n * n];
        for k in 0..n {
            let tk = tau(&theta, k);
            for i in 0..n {
                for j in 0..n {
                    t[(k * n + i) * n + j] = tk[(i, j)];
                }
            }
        }
        Oracle { theta, t, residual: res, min_singular }
    }

    fn population() -> Vec<StructureEquations> {
        let mut v: Vec<StructureEquations> = catalog::catalog().into_iter().map(|e| e.s).collect();
        v.extend(catalog::random_population(100, 0));
        v
    }

    fn btp_entries() -> Vec<StructureEquations> {
        catalog::catalog()
            .into_iter()
            .filter(|e| e.expected.get("btp") == Some(&true))
            .map(|e| e.s)
            .collect()
    }

    fn max_diff(a: &[Cx], b: &[Cx]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn abelian_everything_vanishes() {
        let e = Engine::new(&catalog::abelian(3).unwrap().s).unwrap();
        assert_eq!(e.chern().max_abs(), 0.0);
        assert_eq!(e.bismut().max_abs(), 0.0);
        assert_eq!(e.levi_civita().0.max_abs(), 0.0);
        assert_eq!(e.levi_civita().1.max_abs(), 0.0);
        assert_eq!(e.torsion().tensor().max_abs(), 0.0);
        assert_eq!(e.chern_curvature().r11.max_abs(), 0.0);
        assert_eq!(e.bismut_curvature().r20.max_abs(), 0.0);
        let dt = e.derived();
        for t in [&dt.a, &dt.b, &dt.c, &dt.phi, &dt.q, &dt.p, &dt.ric_q, &dt.eta, &dt.chi] {
            assert_eq!(t.max_abs(), 0.0);
        }
        assert!(e.identity_suite().values().all(|v| *v == 0.0));
        assert_eq!(e.pluriclosed_formula_crosscheck().unwrap(), 0.0);
        let x = DenseTensor::from_fn(&[3, 3], &[IndexKind::Lower, IndexKind::Upper], |i| cx(i[0] as f64, i[1] as f64)).unwrap();
        assert_eq!(covariant_derivative(e.bismut(), &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn su2_is_chern_flat_balanced_with_alternating_torsion() {
        let e = Engine::new(&catalog::complexified_su2().unwrap().s).unwrap();
        assert!(e.chern().max_abs() < 1e-14);
        assert!(e.chern_curvature().r11.max_abs() < 1e-14);
        assert!(e.chern_curvature().r20.max_abs() < 1e-14);
        assert!(e.eta_norm() < 1e-14);
        let c = e.torsion().get(0, 1, 2);
        assert!(c.norm() > 0.5);
        let sign = |k: usize, i: usize, j: usize| -> f64 {
            match (k, i, j) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (1, 0, 2) | (2, 1, 0) => -1.0,
                _ => 0.0,
            }
        };
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((e.torsion().get(k, i, j) - c * sign(k, i, j)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn chern_connection_matches_least_squares_oracle() {
        let mut all: Vec<StructureEquations> = catalog::catalog().into_iter().map(|e| e.s).collect();
        all.extend(catalog::random_population(24, 500));
        for b in [cx(0.3, -1.2), cx(-2.0, 0.5)] {
            all.push(catalog::family_ab(cx(1.0, 0.0), b).unwrap().s);
        }
        for s in all {
            let o = chern_oracle(&s);
            assert!(o.residual < 1e-12, "{}: oracle residual {}", s.name(), o.residual);
            assert!(o.min_singular > 1e-6, "{}: oracle system is singular", s.name());
            let e = Engine::new(&s).unwrap();
            let n = s.n();
            let th: Vec<Cx> = (0..n * n * 2 * n).map(|p| e.chern().w[p]).collect();
            assert!(max_diff(&th, &o.theta) < 1e-10, "{}", s.name());
            assert!(max_diff(e.torsion().tensor().data(), &o.t) < 1e-10, "{}", s.name());
            assert!(e.chern_type_residual() < 1e-12);
            assert!(e.levi_civita_residual() < 1e-12);
        }
    }

    #[test]
    fn n3_torsion_pattern() {
        let e = Engine::new(&catalog::n3_example().unwrap().s).unwrap();
        assert!(e.eta_norm() < 1e-14);
        let mut nonzero = 0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    if e.torsion().get(k, i, j).norm() > 1e-12 {
                        nonzero += 1;
                        assert!(k < 2 && (i == 2 || j == 2), "T^{k}_{i}{j}");
                    }
                }
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn ricq_example_has_vanishing_ricci_but_not_q() {
        let s = catalog::ricq_counterexample5().unwrap().s;
        let e = Engine::new(&s).unwrap();
        assert!(e.derived().ric_q.max_abs() < 1e-10);
        assert!(e.derived().q.max_abs() > 0.1);
        // η traced from the oracle torsion, η_k = Σ_i T^i_ik
        let o = chern_oracle(&s);
        let n = 5;
        let eta: Vec<Cx> = (0..n).map(|k| (0..n).map(|i| o.t[(i * n + i) * n + k]).sum()).collect();
        assert!(max_diff(&eta, &e.eta()) < 1e-10);
        assert!((e.eta_norm() - 10f64.sqrt()).abs() < 1e-10, "|η| = {}", e.eta_norm());
    }

    #[test]
    fn family_bismut_is_20_flat_and_eta_parallel() {
        for b in [cx(2.0, 0.0), cx(0.0, 1.0), cx(1.0, 1.0), cx(-0.7, 1.3)] {
            let e = Engine::new(&catalog::family_ab(cx(1.0, 0.0), b).unwrap().s).unwrap();
            assert!(e.bismut_curvature().r20.max_abs() < 1e-12);
            let deta = covariant_derivative(e.bismut(), &e.derived().eta).unwrap();
            assert!(deta.max_abs() < 1e-12);
        }
    }

    #[test]
    fn bismut_is_metric() {
        for s in population() {
            let e = Engine::new(&s).unwrap();
            let n = s.n();
            let g = DenseTensor::from_fn(&[n, n], &[IndexKind::Lower, IndexKind::LowerBar], |i| {
                if i[0] == i[1] {
                    cx(1.0, 0.0)
                } else {
                    ZERO
                }
            })
            .unwrap();
            for c in [e.chern(), e.bismut()] {
                assert!(covariant_derivative(c, &g).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_extent_is_rejected() {
        let e = Engine::new(&catalog::n3_example().unwrap().s).unwrap();
        let t = DenseTensor::zeros(&[2, 3], &[IndexKind::Lower, IndexKind::Lower]).unwrap();
        assert!(matches!(covariant_derivative(e.bismut(), &t), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn gauduchon_line_endpoints() {
        let e = Engine::new(&catalog::family_ab(cx(1.0, 0.0), cx(1.0, 1.0)).unwrap().s).unwrap();
        let w0 = e.gauduchon_connection(0.0);
        let w1 = e.gauduchon_connection(1.0);
        assert!(max_diff(&w0.w, &e.chern().w) == 0.0);
        assert!(max_diff(&w1.w, &e.bismut().w) < 1e-15);
        assert!((e.gauduchon_torsion_parallel(1.0, 1.0) - e.bismut_torsion_parallel()).abs() < 1e-15);
    }

    #[test]
    fn torsion_parallelism_agrees_for_both_torsions() {
        for s in population() {
            let e = Engine::new(&s).unwrap();
            let tb = e.bismut_torsion_parallel();
            let tc = e.torsion_derivative_bismut().max_abs();
            assert_eq!(tb < 1e-9, tc < 1e-9, "{}: {tb} vs {tc}", s.name());
        }
    }

    #[test]
    fn eta_is_the_lee_form_of_omega_power() {
        for s in population() {
            let e = Engine::new(&s).unwrap();
            let n = s.n();
            let w = power(&omega(n), n - 1).unwrap();
            let dw = d(&s, &w).unwrap().part(n, n - 1);
            let rhs = crate::forms::wedge(&e.eta_form(), &w).unwrap().scale(cx(-1.0, 0.0));
            assert!(dw.sub(&rhs).unwrap().max_abs() < 1e-12, "{}", s.name());
        }
    }

    #[test]
    fn btp_contraction_identities() {
        for s in btp_entries() {
            let e = Engine::new(&s).unwrap();
            let n = s.n();
            let eta = e.eta();
            for i in 0..n {
                for k in 0..n {
                    let v: Cx = (0..n).map(|r| eta[r] * e.torsion().get(r, i, k)).sum();
                    assert!(v.norm() < 1e-12, "{}", s.name());
                }
            }
            let dq = covariant_derivative(e.bismut(), &e.derived().q).unwrap();
            assert!(dq.max_abs() < 1e-9, "{}", s.name());
            assert!(e.derived().ric_q_formula_residual < 1e-9, "{}", s.name());
        }
    }

    #[test]
    fn identity_suite_on_population() {
        for s in population() {
            let e = Engine::new(&s).unwrap();
            let suite = e.identity_suite();
            assert_eq!(suite.keys().map(String::as_str).collect::<Vec<_>>(), IDENTITY_NAMES);
            for (k, v) in suite {
                assert!(v < 1e-9, "{}: {k} = {v}", s.name());
            }
            assert!(e.pluriclosed_formula_crosscheck().unwrap() < 1e-10);
        }
    }

    fn framed(seed: u64, n: usize) -> (StructureEquations, StructureEquations, UnitaryMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = catalog::random_2step(seed, n, 1 + seed as usize % (n - 1), 0.8).unwrap();
        let u = UnitaryMatrix::random(n, &mut rng);
        let t = s.change_frame(&u).unwrap();
        (s, t, u)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn connections_are_skew_hermitian(seed in 0u64..100_000, n in 2usize..6) {
            let (_, s, _) = framed(seed, n);
            let e = Engine::new(&s).unwrap();
            for c in [e.chern(), e.gamma(), e.bismut(), e.levi_civita().0] {
                prop_assert!(c.skew_hermitian_residual() < 1e-11);
            }
            prop_assert!(e.levi_civita().1.skew_symmetric_10_residual() < 1e-11);
            let tt = e.torsion().tensor();
            for k in 0..n { for i in 0..n { for j in 0..n {
                prop_assert!((tt.at(&[k, i, j]) + tt.at(&[k, j, i])).norm() < 1e-12);
            }}}
        }

        #[test]
        fn curvature_symmetries(seed in 0u64..100_000, n in 2usize..6) {
            let (_, s, _) = framed(seed, n);
            let e = Engine::new(&s).unwrap();
            for c in [e.chern_curvature(), e.bismut_curvature()] {
                prop_assert!(c.r02_pairing_residual < 1e-11);
                for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
                    prop_assert!((c.r11.at(&[i, j, k, l]) - c.r11.at(&[j, i, l, k]).conj()).norm() < 1e-11);
                    prop_assert!((c.r20.at(&[i, j, k, l]) + c.r20.at(&[j, i, k, l])).norm() < 1e-11);
                }}}}
            }
            let dt = e.derived();
            for i in 0..n { for j in 0..n {
                prop_assert!((dt.a.at(&[i, j]) - dt.a.at(&[j, i]).conj()).norm() < 1e-11);
                prop_assert!((dt.b.at(&[i, j]) - dt.b.at(&[j, i]).conj()).norm() < 1e-11);
                prop_assert!((dt.c.at(&[i, j]) - dt.c.at(&[j, i])).norm() < 1e-11);
                prop_assert!((dt.phi_star.at(&[i, j]) - dt.phi.at(&[j, i]).conj()).norm() < 1e-14);
            }}
        }

        #[test]
        fn frame_covariance(seed in 0u64..100_000, n in 2usize..6) {
            let (s, t, u) = framed(seed, n);
            let (e, f) = (Engine::new(&s).unwrap(), Engine::new(&t).unwrap());
            prop_assert!((e.eta_norm() - f.eta_norm()).abs() < 1e-10);
            prop_assert!((e.torsion().tensor().norm_sqr() - f.torsion().tensor().norm_sqr()).abs() < 1e-10);
            let moved = crate::tensor::change_frame(e.torsion().tensor(), &u).unwrap();
            prop_assert!(moved.max_diff(f.torsion().tensor()).unwrap() < 1e-10);
            let moved = crate::tensor::change_frame(&e.bismut_curvature().r11, &u).unwrap();
            prop_assert!(moved.max_diff(&f.bismut_curvature().r11).unwrap() < 1e-10);
            for (k, v) in f.identity_suite() {
                prop_assert!(v < 1e-9, "{k} = {v}");
            }
        }
    }
}
