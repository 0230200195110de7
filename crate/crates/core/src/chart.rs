//! Pointwise checks on conformal metrics g = e^{2u} g̃ over domains of ℂⁿ.
//!
//! Derivatives come from [`Jet2`], second-order forward differentiation in the
//! 2n real coordinates (x_1..x_n, y_1..y_n) with z_k = x_k + √−1 y_k. Wirtinger
//! derivatives are read off as ∂_z = ½(∂_x − √−1∂_y), ∂_z̄ = ½(∂_x + √−1∂_y).

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::forms::{wedge, InvariantForm};
use crate::tensor::{CMatrix, Cx, I, ONE, ZERO};

/// Value, gradient and Hessian in m real variables, with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: Cx,
    pub grad: Vec<Cx>,
    /// Row-major m×m, symmetric.
    pub hess: Vec<Cx>,
}

impl Jet2 {
    pub fn constant(m: usize, c: Cx) -> Self {
        Jet2 { value: c, grad: vec![ZERO; m], hess: vec![ZERO; m * m] }
    }

    /// The real coordinate with index `k` at value `x`.
    pub fn variable(m: usize, k: usize, x: f64) -> Self {
        let mut j = Self::constant(m, Cx::new(x, 0.0));
        j.grad[k] = ONE;
        j
    }

    /// z_k at the point `z`, for n = m/2 complex coordinates.
    pub fn coordinate(z: &[Cx], k: usize) -> Self {
        let n = z.len();
        let mut j = Self::constant(2 * n, z[k]);
        j.grad[k] = ONE;
        j.grad[n + k] = I;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn conj(&self) -> Self {
        Jet2 {
            value: self.value.conj(),
            grad: self.grad.iter().map(|z| z.conj()).collect(),
            hess: self.hess.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Cx) -> Self {
        Jet2 {
            value: self.value * c,
            grad: self.grad.iter().map(|z| z * c).collect(),
            hess: self.hess.iter().map(|z| z * c).collect(),
        }
    }

    /// f∘self for a scalar function with f(v), f'(v), f''(v) given.
    pub fn compose(&self, f0: Cx, f1: Cx, f2: Cx) -> Self {
        let m = self.dim();
        let mut hess = vec![ZERO; m * m];
        for a in 0..m {
            for b in 0..m {
                hess[a * m + b] = f2 * self.grad[a] * self.grad[b] + f1 * self.hess[a * m + b];
            }
        }
        Jet2 { value: f0, grad: self.grad.iter().map(|g| g * f1).collect(), hess }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        let v = self.value;
        self.compose(v.ln(), v.inv(), -(v * v).inv())
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.compose(v.inv(), -(v * v).inv(), (v * v * v).inv() * 2.0)
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value;
        let kf = k as f64;
        self.compose(v.powi(k), v.powi(k - 1) * kf, v.powi(k - 2) * (kf * (kf - 1.0)))
    }

    /// |self|² = self·conj(self).
    pub fn norm_sqr(&self) -> Self {
        self * &self.conj()
    }

    /// ∂/∂z_k, with n = m/2.
    pub fn dz(&self, k: usize) -> Cx {
        let n = self.dim() / 2;
        (self.grad[k] - I * self.grad[n + k]) * 0.5
    }

    /// ∂/∂z̄_k
    pub fn dzbar(&self, k: usize) -> Cx {
        let n = self.dim() / 2;
        (self.grad[k] + I * self.grad[n + k]) * 0.5
    }

    fn wirtinger2(&self, i: usize, bi: bool, j: usize, bj: bool) -> Cx {
        let m = self.dim();
        let n = m / 2;
        let s = |bar: bool| if bar { I } else { -I };
        // ¼ (∂x_i + s_i ∂y_i)(∂x_j + s_j ∂y_j)
        let (si, sj) = (s(bi), s(bj));
        let h = |a: usize, b: usize| self.hess[a * m + b];
        (h(i, j) + sj * h(i, n + j) + si * h(n + i, j) + si * sj * h(n + i, n + j)) * 0.25
    }

    /// ∂²/∂z_i∂z_j
    pub fn dzdz(&self, i: usize, j: usize) -> Cx {
        self.wirtinger2(i, false, j, false)
    }

    /// ∂²/∂z_i∂z̄_j
    pub fn dzdzbar(&self, i: usize, j: usize) -> Cx {
        self.wirtinger2(i, false, j, true)
    }

    /// ∂²/∂z̄_i∂z̄_j
    pub fn dzbardzbar(&self, i: usize, j: usize) -> Cx {
        self.wirtinger2(i, true, j, true)
    }

    /// For a real field: max of |Im u|, |conj(u_i) − u_ī| and |conj(u_ij) − u_īj̄|.
    pub fn reality_residual(&self) -> f64 {
        let n = self.dim() / 2;
        let mut r = self.value.im.abs();
        for i in 0..n {
            r = r.max((self.dz(i).conj() - self.dzbar(i)).norm());
            for j in 0..n {
                r = r.max((self.dzdz(i, j).conj() - self.dzbardzbar(i, j)).norm());
            }
        }
        r
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, o: &Jet2) -> Jet2 {
        self + &(-o)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-ONE)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, o: &Jet2) -> Jet2 {
        let m = self.dim();
        let mut hess = vec![ZERO; m * m];
        for a in 0..m {
            for b in 0..m {
                let k = a * m + b;
                hess[k] = self.value * o.hess[k]
                    + o.value * self.hess[k]
                    + self.grad[a] * o.grad[b]
                    + o.grad[a] * self.grad[b];
            }
        }
        Jet2 {
            value: self.value * o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| self.value * b + o.value * a).collect(),
            hess,
        }
    }
}

/// Scalar fields built from a few composable pieces.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Const(Cx),
    /// c_0 + Σ c_k z_k
    Affine { constant: Cx, coeffs: Vec<Cx> },
    Conj(Box<Field>),
    Add(Box<Field>, Box<Field>),
    Mul(Box<Field>, Box<Field>),
    Scale(Cx, Box<Field>),
    Ln(Box<Field>),
    Exp(Box<Field>),
    /// |f|²
    NormSqr(Box<Field>),
    /// Re f
    Re(Box<Field>),
}

impl Field {
    pub fn z(n: usize, k: usize) -> Field {
        let mut coeffs = vec![ZERO; n];
        coeffs[k] = ONE;
        Field::Affine { constant: ZERO, coeffs }
    }

    /// −½ log Σ_k |z_k − p_k|²
    pub fn inverse_distance_log(p: &[Cx]) -> Field {
        let n = p.len();
        let mut sum = Field::Const(ZERO);
        for (k, c) in p.iter().enumerate() {
            let mut coeffs = vec![ZERO; n];
            coeffs[k] = ONE;
            let w = Field::Affine { constant: -c, coeffs };
            sum = Field::Add(Box::new(sum), Box::new(Field::NormSqr(Box::new(w))));
        }
        Field::Scale(Cx::new(-0.5, 0.0), Box::new(Field::Ln(Box::new(sum))))
    }

    pub fn jet(&self, z: &[Cx]) -> Jet2 {
        let m = 2 * z.len();
        match self {
            Field::Const(c) => Jet2::constant(m, *c),
            Field::Affine { constant, coeffs } => {
                let mut j = Jet2::constant(m, *constant);
                for (k, c) in coeffs.iter().enumerate() {
                    if *c != ZERO {
                        j = &j + &Jet2::coordinate(z, k).scale(*c);
                    }
                }
                j
            }
            Field::Conj(f) => f.jet(z).conj(),
            Field::Add(a, b) => &a.jet(z) + &b.jet(z),
            Field::Mul(a, b) => &a.jet(z) * &b.jet(z),
            Field::Scale(c, f) => f.jet(z).scale(*c),
            Field::Ln(f) => f.jet(z).ln(),
            Field::Exp(f) => f.jet(z).exp(),
            Field::NormSqr(f) => f.jet(z).norm_sqr(),
            Field::Re(f) => {
                let j = f.jet(z);
                (&j + &j.conj()).scale(Cx::new(0.5, 0.0))
            }
        }
    }

    pub fn value(&self, z: &[Cx]) -> Cx {
        self.jet(z).value
    }
}

/// A Kähler metric g̃ on a domain of ℂⁿ, with its first derivatives.
pub trait KahlerBackground: Send + Sync + std::fmt::Debug {
    /// g̃_{ij̄}
    fn metric(&self, z: &[Cx]) -> CMatrix;
    /// ∂g̃_{ij̄}/∂z_k
    fn metric_dz(&self, z: &[Cx], k: usize) -> CMatrix;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Flat;

impl KahlerBackground for Flat {
    fn metric(&self, z: &[Cx]) -> CMatrix {
        CMatrix::identity(z.len(), z.len())
    }
    fn metric_dz(&self, z: &[Cx], _k: usize) -> CMatrix {
        CMatrix::zeros(z.len(), z.len())
    }
}

/// Guard radius around excluded points.
pub const GUARD_RADIUS: f64 = 1e-6;

/// The metric e^{2u} g̃ on ℂⁿ minus a finite set of points.
#[derive(Debug)]
pub struct ConformalChart {
    n: usize,
    background: Box<dyn KahlerBackground>,
    u: Field,
    excluded: Vec<Vec<Cx>>,
}

impl ConformalChart {
    pub fn new(n: usize, background: Box<dyn KahlerBackground>, u: Field, excluded: Vec<Vec<Cx>>) -> Result<Self> {
        if !(1..=crate::tensor::MAX_DIM).contains(&n) {
            return Err(Error::InvalidParameter(format!("n = {n} outside 1..={}", crate::tensor::MAX_DIM)));
        }
        if excluded.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch("excluded point of the wrong dimension".into()));
        }
        Ok(ConformalChart { n, background, u, excluded })
    }

    pub fn flat(n: usize, u: Field, excluded: Vec<Vec<Cx>>) -> Result<Self> {
        Self::new(n, Box::new(Flat), u, excluded)
    }

    /// Flat chart with u = −½ log |z − p|², singular at p.
    pub fn inverse_distance(p: &[Cx]) -> Result<Self> {
        Self::flat(p.len(), Field::inverse_distance_log(p), vec![p.to_vec()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn admits(&self, z: &[Cx]) -> bool {
        z.len() == self.n
            && self.excluded.iter().all(|p| p.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() > GUARD_RADIUS)
    }

    fn guard(&self, z: &[Cx]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch(format!("point of length {} for n = {}", z.len(), self.n)));
        }
        if !self.admits(z) {
            return Err(Error::SingularPoint);
        }
        Ok(())
    }

    /// Jet of u at z; u must be real there.
    pub fn u_jet(&self, z: &[Cx]) -> Result<Jet2> {
        self.guard(z)?;
        let j = self.u.jet(z);
        if !j.value.re.is_finite() || j.grad.iter().chain(&j.hess).any(|c| !crate::tensor::is_finite(*c)) {
            return Err(Error::NotFinite("u"));
        }
        if j.value.im.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("u is not real at this point (Im u = {:e})", j.value.im)));
        }
        Ok(j)
    }

    /// Γ̃^k_{ij} = Σ_l ∂_j g̃_{il̄} g̃^{l̄k}, stored [k][i][j].
    pub fn christoffel(&self, z: &[Cx]) -> Result<Vec<Cx>> {
        let n = self.n;
        let g = self.background.metric(z);
        let ginv = g.try_inverse().ok_or_else(|| Error::PreconditionFailed("background metric is singular".into()))?;
        let dg: Vec<CMatrix> = (0..n).map(|k| self.background.metric_dz(z, k)).collect();
        let mut out = vec![ZERO; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(k * n + i) * n + j] = (0..n).map(|l| dg[j][(i, l)] * ginv[(l, k)]).sum();
                }
            }
        }
        Ok(out)
    }
}

/// Defect of the conformal-Vaisman equations
/// u_ij = 2u_iu_j + Σ_k u_k Γ̃^k_ij and u_ij̄ = 2u_iū_j − 2|∂u|²_g̃ g̃_ij̄.
pub fn vaisman_pde_residual(chart: &ConformalChart, z: &[Cx]) -> Result<f64> {
    let u = chart.u_jet(z)?;
    let n = chart.n;
    let gamma = chart.christoffel(z)?;
    let g = chart.background.metric(z);
    let ginv = g.clone().try_inverse().ok_or_else(|| Error::PreconditionFailed("background metric is singular".into()))?;
    let ui: Vec<Cx> = (0..n).map(|i| u.dz(i)).collect();
    // |∂u|² = Σ g̃^{j̄i} u_i ū_j
    let mut grad2 = ZERO;
    for i in 0..n {
        for j in 0..n {
            grad2 += ginv[(j, i)] * ui[i] * ui[j].conj();
        }
    }
    let mut r = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let hol: Cx = (0..n).map(|k| ui[k] * gamma[(k * n + i) * n + j]).sum();
            r = r.max((u.dzdz(i, j) - ui[i] * ui[j] * 2.0 - hol).norm());
            let mixed = u.dzdzbar(i, j) - ui[i] * ui[j].conj() * 2.0 + grad2 * g[(i, j)] * 2.0;
            r = r.max(mixed.norm());
        }
    }
    Ok(r)
}

/// Max coefficient of dω − ψ∧ω at z, with ψ = −(η + η̄)/(n−1) and η read off
/// the Chern torsion T^k_ij = g^{kl̄}(∂_i g_jl̄ − ∂_j g_il̄) of g = e^{2u} g̃.
pub fn lee_form_check(chart: &ConformalChart, z: &[Cx]) -> Result<f64> {
    let n = chart.n;
    if n < 2 {
        return Err(Error::NotApplicable("the Lee form needs n ≥ 2".into()));
    }
    let u = chart.u_jet(z)?;
    let e2u = (u.value.re * 2.0).exp();
    let gt = chart.background.metric(z);
    let g = gt.clone() * Cx::new(e2u, 0.0);
    // ∂_k g_{ij̄} = e^{2u}(2u_k g̃_{ij̄} + ∂_k g̃_{ij̄})
    let dg: Vec<CMatrix> =
        (0..n).map(|k| (gt.clone() * (u.dz(k) * 2.0) + chart.background.metric_dz(z, k)) * Cx::new(e2u, 0.0)).collect();
    let ginv = g.clone().try_inverse().ok_or_else(|| Error::PreconditionFailed("metric is singular".into()))?;

    // dω with ω = √−1 Σ g_{ij̄} dz_i∧dz̄_j; generators dz_k ↦ k, dz̄_k ↦ n + k.
    let mut items = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for (k, dgk) in dg.iter().enumerate() {
                items.push((vec![k, i, n + j], I * dgk[(i, j)]));
                // ∂̄_k g_{ij̄} = conj(∂_k g_{jī})
                items.push((vec![n + k, i, n + j], I * dgk[(j, i)].conj()));
            }
        }
    }
    let domega = InvariantForm::from_monomials(n, 3, &items)?;

    let mut eta = vec![ZERO; 2 * n];
    for i in 0..n {
        for k in 0..n {
            // T^k_{ki} = Σ_l g^{l̄k}(∂_k g_{il̄} − ∂_i g_{kl̄})
            eta[i] += (0..n).map(|l| ginv[(l, k)] * (dg[k][(i, l)] - dg[i][(k, l)])).sum::<Cx>();
        }
    }
    let c = -1.0 / (n as f64 - 1.0);
    let eta_form = InvariantForm::from_one_form(n, &eta);
    let psi = eta_form.add(&eta_form.conj())?.scale(Cx::new(c, 0.0));
    let mut witems = Vec::new();
    for i in 0..n {
        for j in 0..n {
            witems.push((vec![i, n + j], I * g[(i, j)]));
        }
    }
    let omega = InvariantForm::from_monomials(n, 2, &witems)?;
    Ok(domega.sub(&wedge(&psi, &omega)?)?.max_abs())
}

/// Max relative error of the jet's gradient and Hessian against central
/// differences with step h, |ad − fd| / max(|fd|, 1). The Hessian is
/// differenced from the jet gradient.
pub fn ad_crosscheck(chart: &ConformalChart, z: &[Cx], h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step {h} must be positive")));
    }
    let n = chart.n;
    let m = 2 * n;
    let base = chart.u_jet(z)?;
    let shifted = |a: usize, s: f64| -> Result<Jet2> {
        let mut w = z.to_vec();
        if a < n {
            w[a] += Cx::new(s, 0.0);
        } else {
            w[a - n] += Cx::new(0.0, s);
        }
        chart.guard(&w)?;
        Ok(chart.u.jet(&w))
    };
    let rel = |ad: Cx, fd: Cx| (ad - fd).norm() / fd.norm().max(1.0);
    let mut worst = 0.0f64;
    for a in 0..m {
        let (p, q) = (shifted(a, h)?, shifted(a, -h)?);
        let fd = (p.value - q.value) / (2.0 * h);
        worst = worst.max(rel(base.grad[a], fd));
        for b in 0..m {
            let fd = (p.grad[b] - q.grad[b]) / (2.0 * h);
            worst = worst.max(rel(base.hess[b * m + a], fd));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::cx;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn pt(v: &[(f64, f64)]) -> Vec<Cx> {
        v.iter().map(|&(a, b)| cx(a, b)).collect()
    }

    #[test]
    fn wirtinger_of_monomials() {
        // u = z1² z̄2 at (1+i, 2)
        let z = pt(&[(1.0, 1.0), (2.0, 0.0)]);
        let f = Field::Mul(
            Box::new(Field::Mul(Box::new(Field::z(2, 0)), Box::new(Field::z(2, 0)))),
            Box::new(Field::Conj(Box::new(Field::z(2, 1)))),
        );
        let j = f.jet(&z);
        assert!((j.value - z[0] * z[0] * z[1].conj()).norm() < 1e-14);
        assert!((j.dz(0) - z[0] * 2.0 * z[1].conj()).norm() < 1e-14);
        assert!(j.dz(1).norm() < 1e-14);
        assert!((j.dzbar(1) - z[0] * z[0]).norm() < 1e-14);
        assert!((j.dzdz(0, 0) - z[1].conj() * 2.0).norm() < 1e-14);
        assert!((j.dzdzbar(0, 1) - z[0] * 2.0).norm() < 1e-14);
        assert!(j.dzdzbar(1, 1).norm() < 1e-14);
    }

    #[test]
    fn inverse_distance_solves_the_flat_equations() {
        let p = pt(&[(0.3, -0.2), (1.0, 0.5)]);
        let chart = ConformalChart::inverse_distance(&p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z: Vec<Cx> = (0..2).map(|_| cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            assert!(vaisman_pde_residual(&chart, &z).unwrap() < 1e-9);
        }
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let chart = ConformalChart::flat(2, Field::Const(cx(0.7, 0.0)), vec![]).unwrap();
        let z = pt(&[(0.1, 0.2), (0.3, 0.4)]);
        assert_eq!(vaisman_pde_residual(&chart, &z).unwrap(), 0.0);
        assert_eq!(lee_form_check(&chart, &z).unwrap(), 0.0);
    }

    #[test]
    fn squared_modulus_fails_the_equations() {
        // u = |z1|², u_1 = z̄1, u_11 = 0: the holomorphic block misses by 2 z̄1²
        let chart = ConformalChart::flat(2, Field::NormSqr(Box::new(Field::z(2, 0))), vec![]).unwrap();
        let r = vaisman_pde_residual(&chart, &pt(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!((r - 2.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn conformally_flat_metrics_satisfy_the_lee_relation() {
        // e^{2u} g_0 is globally conformal to a Kähler metric, so dω = 2du∧ω for every u
        let z = pt(&[(0.4, -0.3), (0.2, 0.9)]);
        let p = pt(&[(1.0, 0.0), (0.0, 1.0)]);
        let a = ConformalChart::inverse_distance(&p).unwrap();
        assert!(lee_form_check(&a, &z).unwrap() < 1e-8);
        let b = ConformalChart::flat(2, Field::NormSqr(Box::new(Field::z(2, 0))), vec![]).unwrap();
        assert!(lee_form_check(&b, &z).unwrap() < 1e-8);
    }

    #[test]
    fn singular_point_is_rejected() {
        let p = pt(&[(1.0, 0.0), (0.0, 0.0)]);
        let chart = ConformalChart::inverse_distance(&p).unwrap();
        assert!(matches!(vaisman_pde_residual(&chart, &p), Err(Error::SingularPoint)));
        let near = pt(&[(1.0 + 1e-7, 0.0), (0.0, 0.0)]);
        assert!(matches!(lee_form_check(&chart, &near), Err(Error::SingularPoint)));
    }

    #[test]
    fn finite_differences_agree() {
        let chart = ConformalChart::inverse_distance(&[ZERO, ZERO]).unwrap();
        let z = pt(&[(1.0, 0.0), (2.0, 0.5)]);
        assert!(ad_crosscheck(&chart, &z, 1e-5).unwrap() < 1e-6);
        let lin = ConformalChart::flat(2, Field::Re(Box::new(Field::z(2, 0))), vec![]).unwrap();
        assert!(ad_crosscheck(&lin, &z, 1e-3).unwrap() < 1e-12);
    }

    #[test]
    fn nonflat_background_christoffel() {
        // potential |z|² + ½|z1|⁴: g̃_11̄ = 1 + 2|z1|², Γ̃^1_11 = 2 z̄1 / (1 + 2|z1|²)
        #[derive(Debug)]
        struct Quartic;
        impl KahlerBackground for Quartic {
            fn metric(&self, z: &[Cx]) -> CMatrix {
                let mut g = CMatrix::identity(2, 2);
                g[(0, 0)] += z[0].norm_sqr() * 2.0;
                g
            }
            fn metric_dz(&self, z: &[Cx], k: usize) -> CMatrix {
                let mut d = CMatrix::zeros(2, 2);
                if k == 0 {
                    d[(0, 0)] = z[0].conj() * 2.0;
                }
                d
            }
        }
        let chart = ConformalChart::new(2, Box::new(Quartic), Field::Const(ZERO), vec![]).unwrap();
        let z = pt(&[(0.5, 0.5), (0.1, 0.0)]);
        let g = chart.christoffel(&z).unwrap();
        let want = z[0].conj() * 2.0 / (1.0 + 2.0 * z[0].norm_sqr());
        assert!((g[0] - want).norm() < 1e-14);
        assert!(g[1..].iter().all(|c| c.norm() < 1e-14));
        assert_eq!(vaisman_pde_residual(&chart, &z).unwrap(), 0.0);
    }

    fn poly() -> impl Strategy<Value = Field> {
        let leaf = prop_oneof![
            (0usize..2).prop_map(|k| Field::z(2, k)),
            (0usize..2).prop_map(|k| Field::Conj(Box::new(Field::z(2, k)))),
            (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Field::Const(cx(a, b))),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Field::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Field::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn product_rule_is_exact(f in poly(), g in poly(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let z = [cx(x, y), cx(y, -x)];
            let (a, b) = (f.jet(&z), g.jet(&z));
            let p = &a * &b;
            for k in 0..4 {
                let want = a.grad[k] * b.value + a.value * b.grad[k];
                prop_assert!((p.grad[k] - want).norm() <= 1e-9 * (1.0 + want.norm()));
            }
            // second derivatives of a polynomial by differencing its exact gradient
            let h = 1e-4;
            let m = 4;
            for k in 0..m {
                let mut zp = z; let mut zm = z;
                if k < 2 { zp[k] += cx(h, 0.0); zm[k] -= cx(h, 0.0) } else { zp[k - 2] += cx(0.0, h); zm[k - 2] -= cx(0.0, h) }
                let (jp, jm) = (f.jet(&zp), f.jet(&zm));
                for l in 0..m {
                    let fd = (jp.grad[l] - jm.grad[l]) / (2.0 * h);
                    prop_assert!((a.hess[l * m + k] - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
                }
            }
        }

        #[test]
        fn chain_rule_through_exp_and_log(x in 0.2f64..1.5, y in -1.0f64..1.0) {
            let z = [cx(x, y)];
            let f = Field::NormSqr(Box::new(Field::z(1, 0)));
            let lhs = Field::Ln(Box::new(Field::Exp(Box::new(f.clone())))).jet(&z);
            let rhs = f.jet(&z);
            prop_assert!((lhs.value - rhs.value).norm() < 1e-12);
            for (a, b) in lhs.grad.iter().chain(&lhs.hess).zip(rhs.grad.iter().chain(&rhs.hess)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn real_fields_satisfy_reality(ax in -1.0f64..1.0, ay in -1.0f64..1.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let chart = ConformalChart::inverse_distance(&[cx(ax, ay), cx(0.5, 0.5)]).unwrap();
            let z = [cx(x, y), cx(y, x)];
            prop_assume!(chart.admits(&z));
            let j = chart.u_jet(&z).unwrap();
            let scale = j.hess.iter().fold(1.0f64, |m, c| m.max(c.norm()));
            prop_assert!(j.reality_residual() < 1e-12 * scale);
        }
    }
}
