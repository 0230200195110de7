//! Left-invariant forms over the coframe φ_1..φ_n, φ̄_1..φ̄_n and the
//! exterior derivative induced by structure constants.
//!
//! Generator a < n is φ_{a+1}; generator n + a is φ̄_{a+1}. A 2-form is also
//! handled as an antisymmetric 2n×2n matrix M with form = ½ Σ M_ab ψ_a∧ψ_b.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{change_frame, CMatrix, Cx, DenseTensor, IndexKind, UnitaryMatrix, I, MAX_DIM, ZERO};

/// Coefficients below this magnitude are dropped from sparse forms.
pub const DROP_TOL: f64 = 1e-14;
/// d∘d residual a structure must stay under to count as validated.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Wedge of two monomials given as generator bitmasks.
#[inline]
fn mono_wedge(a: u32, b: u32) -> Option<(u32, f64)> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        swaps += (a >> (y + 1)).count_ones();
        rest &= rest - 1;
    }
    Some((a | b, if swaps.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

fn bits(m: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |b| m >> b & 1 == 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantForm {
    n: usize,
    degree: usize,
    terms: BTreeMap<u32, Cx>,
}

impl InvariantForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        InvariantForm { n, degree, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: Cx) -> Self {
        let mut f = Self::zero(n, 0);
        f.add_term(0, c);
        f
    }

    /// The generator ψ_a (a < n: φ_{a+1}, otherwise φ̄_{a-n+1}).
    pub fn generator(n: usize, a: usize) -> Self {
        assert!(a < 2 * n, "generator index out of range");
        let mut f = Self::zero(n, 1);
        f.terms.insert(1 << a, Cx::new(1.0, 0.0));
        f
    }
    pub fn phi(n: usize, i: usize) -> Self {
        Self::generator(n, i)
    }
    pub fn phibar(n: usize, i: usize) -> Self {
        Self::generator(n, n + i)
    }

    /// Builds a form from (sorted-or-not generator list, coefficient) pairs;
    /// unsorted lists are reordered with the permutation sign.
    pub fn from_monomials(n: usize, degree: usize, items: &[(Vec<usize>, Cx)]) -> Result<Self> {
        let mut f = Self::zero(n, degree);
        for (gens, c) in items {
            if gens.len() != degree || gens.iter().any(|&g| g >= 2 * n) {
                return Err(Error::DimensionMismatch(format!("monomial {gens:?} for degree {degree}, n = {n}")));
            }
            let mut mask = 0u32;
            let mut sign = 1.0;
            for &g in gens {
                match mono_wedge(mask, 1 << g) {
                    Some((m, s)) => {
                        mask = m;
                        sign *= s;
                    }
                    None => {
                        sign = 0.0;
                        break;
                    }
                }
            }
            if sign != 0.0 {
                f.add_term(mask, *c * sign);
            }
        }
        f.prune();
        Ok(f)
    }

    pub fn from_one_form(n: usize, coeffs: &[Cx]) -> Self {
        let mut f = Self::zero(n, 1);
        for (a, c) in coeffs.iter().enumerate() {
            f.add_term(1 << a, *c);
        }
        f.prune();
        f
    }

    pub fn from_two_form(n: usize, m: &CMatrix) -> Self {
        let mut f = Self::zero(n, 2);
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                f.add_term(1 << a | 1 << b, m[(a, b)]);
            }
        }
        f.prune();
        f
    }

    /// Antisymmetric matrix of a 2-form.
    pub fn two_form_matrix(&self) -> Result<CMatrix> {
        if self.degree != 2 {
            return Err(Error::DimensionMismatch(format!("degree {} is not 2", self.degree)));
        }
        let mut m = CMatrix::zeros(2 * self.n, 2 * self.n);
        for (&mask, &c) in &self.terms {
            let g: Vec<usize> = bits(mask).collect();
            m[(g[0], g[1])] = c;
            m[(g[1], g[0])] = -c;
        }
        Ok(m)
    }

    /// Coefficients of a 1-form on e_1..e_n, ē_1..ē_n.
    pub fn one_form_coeffs(&self) -> Result<Vec<Cx>> {
        if self.degree != 1 {
            return Err(Error::DimensionMismatch(format!("degree {} is not 1", self.degree)));
        }
        let mut v = vec![ZERO; 2 * self.n];
        for (&mask, &c) in &self.terms {
            v[mask.trailing_zeros() as usize] = c;
        }
        Ok(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    /// Terms keyed by sorted generator lists.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, Cx)> + '_ {
        self.terms.iter().map(|(&m, &c)| (bits(m).collect(), c))
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the sorted monomial on `gens`.
    pub fn coeff(&self, gens: &[usize]) -> Cx {
        let mask = gens.iter().fold(0u32, |m, &g| m | 1 << g);
        self.terms.get(&mask).copied().unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// ℓ² norm of the coefficients; invariant under unitary frame changes.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Σ conj(self_m)·other_m over monomials m.
    pub fn inner(&self, other: &Self) -> Cx {
        self.terms.iter().filter_map(|(m, c)| other.terms.get(m).map(|d| c.conj() * d)).sum()
    }

    fn add_term(&mut self, mask: u32, c: Cx) {
        *self.terms.entry(mask).or_insert(ZERO) += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > DROP_TOL);
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("n = {} vs n = {}", self.n, other.n)));
        }
        if self.degree != other.degree && !self.is_empty() && !other.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "degree {} vs degree {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(Cx::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Cx::new(-1.0, 0.0), other)
    }

    /// self + c·other
    pub fn axpy(&self, c: Cx, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut f = self.clone();
        if f.is_empty() {
            f.degree = other.degree;
        }
        for (&m, &v) in &other.terms {
            f.add_term(m, c * v);
        }
        f.prune();
        Ok(f)
    }

    pub fn scale(&self, c: Cx) -> Self {
        let mut f = self.clone();
        f.terms.values_mut().for_each(|v| *v *= c);
        f.prune();
        f
    }

    /// Complex conjugate: φ_i ↔ φ̄_i with the reordering sign absorbed.
    pub fn conj(&self) -> Self {
        let n = self.n;
        let mut f = Self::zero(n, self.degree);
        for (&mask, &c) in &self.terms {
            let mut out = 0u32;
            let mut sign = 1.0;
            for g in bits(mask) {
                let h = if g < n { g + n } else { g - n };
                let (m, s) = mono_wedge(out, 1 << h).expect("conjugate generators are distinct");
                out = m;
                sign *= s;
            }
            f.add_term(out, c.conj() * sign);
        }
        f
    }

    fn bideg_of(&self, mask: u32) -> (usize, usize) {
        let low = (1u32 << self.n) - 1;
        ((mask & low).count_ones() as usize, (mask & !low).count_ones() as usize)
    }

    /// The (p, q) component.
    pub fn part(&self, p: usize, q: usize) -> Self {
        let mut f = Self::zero(self.n, self.degree);
        for (&m, &c) in &self.terms {
            if self.bideg_of(m) == (p, q) {
                f.terms.insert(m, c);
            }
        }
        f
    }

    /// Bidegree if pure; the zero form reports (degree, 0).
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let mut it = self.terms.keys().map(|&m| self.bideg_of(m));
        match it.next() {
            None => Some((self.degree, 0)),
            Some(first) => it.all(|b| b == first).then_some(first),
        }
    }
}

pub fn wedge(a: &InvariantForm, b: &InvariantForm) -> Result<InvariantForm> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!("n = {} vs n = {}", a.n, b.n)));
    }
    let mut f = InvariantForm::zero(a.n, a.degree + b.degree);
    for (&ma, &ca) in &a.terms {
        for (&mb, &cb) in &b.terms {
            if let Some((m, s)) = mono_wedge(ma, mb) {
                f.add_term(m, ca * cb * s);
            }
        }
    }
    f.prune();
    Ok(f)
}

/// ω = √−1 Σ φ_i∧φ̄_i
pub fn omega(n: usize) -> InvariantForm {
    let mut f = InvariantForm::zero(n, 2);
    for i in 0..n {
        f.add_term(1 << i | 1 << (n + i), I);
    }
    f
}

pub fn power(a: &InvariantForm, k: usize) -> Result<InvariantForm> {
    let mut out = InvariantForm::scalar(a.n, Cx::new(1.0, 0.0));
    for _ in 0..k {
        out = wedge(&out, a)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    /// Largest coefficient of d(dψ) over all generators ψ.
    pub d2_residual: f64,
    /// Generator (0-based, barred ones shifted by n) where it occurs.
    pub worst_generator: usize,
    /// Largest |G| coefficient.
    pub g_max: f64,
    pub validated: bool,
    pub integrable: bool,
}

/// Complex structure constants of a unitary left-invariant coframe:
/// dφ_k = Σ_{i<j} E[k][i][j] φ_i∧φ_j + Σ F[k][i][j] φ_i∧φ̄_j + Σ_{i<j} G[k][i][j] φ̄_i∧φ̄_j,
/// with E and G stored fully antisymmetric in (i, j).
#[derive(Clone, Debug)]
pub struct StructureEquations {
    name: String,
    n: usize,
    e: Vec<Cx>,
    f: Vec<Cx>,
    g: Vec<Cx>,
    dgen: Vec<CMatrix>,
    report: ValidationReport,
}

impl PartialEq for StructureEquations {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.n == o.n && self.e == o.e && self.f == o.f && self.g == o.g
    }
}

#[inline]
fn ix3(n: usize, k: usize, i: usize, j: usize) -> usize {
    (k * n + i) * n + j
}

impl StructureEquations {
    /// Builds from full n×n×n arrays; E and G are antisymmetrized in (i, j).
    pub fn from_arrays(name: &str, n: usize, e: Vec<Cx>, f: Vec<Cx>, g: Vec<Cx>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionMismatch(format!("n = {n} outside 2..={MAX_DIM}")));
        }
        for (label, v) in [("E", &e), ("F", &f), ("G", &g)] {
            if v.len() != n * n * n {
                return Err(Error::ShapeMismatch(format!("{label} has {} entries, want {}", v.len(), n * n * n)));
            }
            if !v.iter().all(|z| crate::tensor::is_finite(*z)) {
                return Err(Error::NotFinite("structure constants"));
            }
        }
        let anti = |v: Vec<Cx>| -> Vec<Cx> {
            let mut w = v.clone();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        w[ix3(n, k, i, j)] = (v[ix3(n, k, i, j)] - v[ix3(n, k, j, i)]) * 0.5;
                    }
                }
            }
            w
        };
        let e = anti(e);
        let g = anti(g);
        let dgen = generator_matrices(n, &e, &f, &g);
        let mut s = StructureEquations {
            name: name.to_string(),
            n,
            e,
            f,
            g,
            dgen,
            report: ValidationReport {
                d2_residual: f64::INFINITY,
                worst_generator: 0,
                g_max: 0.0,
                validated: false,
                integrable: false,
            },
        };
        s.report = s.compute_report();
        Ok(s)
    }

    pub fn abelian(name: &str, n: usize) -> Result<Self> {
        let z = vec![ZERO; n * n * n];
        Self::from_arrays(name, n, z.clone(), z.clone(), z)
    }

    pub fn builder(n: usize) -> StructureBuilder {
        StructureBuilder { n, e: vec![ZERO; n * n * n], f: vec![ZERO; n * n * n], g: vec![ZERO; n * n * n] }
    }

    fn compute_report(&self) -> ValidationReport {
        let n = self.n;
        let mut worst = 0.0;
        let mut worst_generator = 0;
        for a in 0..2 * n {
            let da = InvariantForm::from_two_form(n, &self.dgen[a]);
            let r = self.d_unchecked(&da).max_abs();
            if r > worst {
                worst = r;
                worst_generator = a;
            }
        }
        let g_max = self.g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let validated = worst < VALIDATION_TOL;
        ValidationReport {
            d2_residual: worst,
            worst_generator,
            g_max,
            validated,
            integrable: validated && g_max == 0.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn e(&self, k: usize, i: usize, j: usize) -> Cx {
        self.e[ix3(self.n, k, i, j)]
    }
    pub fn f(&self, k: usize, i: usize, j: usize) -> Cx {
        self.f[ix3(self.n, k, i, j)]
    }
    pub fn g(&self, k: usize, i: usize, j: usize) -> Cx {
        self.g[ix3(self.n, k, i, j)]
    }
    pub fn report(&self) -> &ValidationReport {
        &self.report
    }
    pub fn is_validated(&self) -> bool {
        self.report.validated
    }
    pub fn is_integrable(&self) -> bool {
        self.report.integrable
    }

    /// Matrix of dψ_a in the ½ Σ M ψψ convention.
    pub fn d_generator(&self, a: usize) -> &CMatrix {
        &self.dgen[a]
    }

    pub fn ensure_validated(&self) -> Result<()> {
        if self.report.validated {
            Ok(())
        } else {
            Err(Error::NotValidated { residual: self.report.d2_residual })
        }
    }

    /// Integrable and validated; every geometric computation starts here.
    /// A (0,2) part is reported first since it rules the structure out
    /// whatever d² does.
    pub fn ensure_complex(&self) -> Result<()> {
        if self.report.g_max > 0.0 {
            return Err(Error::NotIntegrable);
        }
        self.ensure_validated()
    }

    fn d_unchecked(&self, a: &InvariantForm) -> InvariantForm {
        let mut out = InvariantForm::zero(self.n, a.degree + 1);
        for (&mask, &c) in &a.terms {
            for (s, g) in bits(mask).enumerate() {
                let left = mask & ((1u32 << g) - 1);
                let right = mask & !((1u32 << (g + 1)) - 1);
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                let dg = &self.dgen[g];
                for b in 0..2 * self.n {
                    for cc in b + 1..2 * self.n {
                        let v = dg[(b, cc)];
                        if v == ZERO {
                            continue;
                        }
                        let mid = 1u32 << b | 1u32 << cc;
                        if let Some((m1, s1)) = mono_wedge(left, mid) {
                            if let Some((m2, s2)) = mono_wedge(m1, right) {
                                out.add_term(m2, c * v * (sign * s1 * s2));
                            }
                        }
                    }
                }
            }
        }
        out.prune();
        out
    }

    /// Unitary frame change e' = U e, so φ' = conj(U) φ.
    pub fn change_frame(&self, u: &UnitaryMatrix) -> Result<Self> {
        let n = self.n;
        if u.n() != n {
            return Err(Error::DimensionMismatch(format!("frame of size {} for n = {n}", u.n())));
        }
        use IndexKind::*;
        let t = |v: &Vec<Cx>, kinds: [IndexKind; 3]| -> Result<Vec<Cx>> {
            let d = DenseTensor::from_vec(&[n, n, n], &kinds, v.clone())?;
            Ok(change_frame(&d, u)?.data().to_vec())
        };
        let e = t(&self.e, [Upper, Lower, Lower])?;
        let f = t(&self.f, [Upper, Lower, LowerBar])?;
        let g = t(&self.g, [Upper, LowerBar, LowerBar])?;
        Self::from_arrays(&self.name, n, e, f, g)
    }

    /// Largest |E|, |F|, |G| coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.e.iter().chain(&self.f).chain(&self.g).fold(0.0, |m, z| m.max(z.norm()))
    }
}

fn generator_matrices(n: usize, e: &[Cx], f: &[Cx], g: &[Cx]) -> Vec<CMatrix> {
    let nn = 2 * n;
    let mut out = vec![CMatrix::zeros(nn, nn); nn];
    for k in 0..n {
        let mut m = CMatrix::zeros(nn, nn);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = e[ix3(n, k, i, j)];
                m[(i, n + j)] = f[ix3(n, k, i, j)];
                m[(n + j, i)] = -f[ix3(n, k, i, j)];
                m[(n + i, n + j)] = g[ix3(n, k, i, j)];
            }
        }
        let swap = |a: usize| if a < n { a + n } else { a - n };
        let mut mc = CMatrix::zeros(nn, nn);
        for a in 0..nn {
            for b in 0..nn {
                mc[(swap(a), swap(b))] = m[(a, b)].conj();
            }
        }
        out[k] = m;
        out[n + k] = mc;
    }
    out
}

/// Accumulates terms in the 0-based (k, i, j) layout of the structure equations.
#[derive(Clone, Debug)]
pub struct StructureBuilder {
    n: usize,
    e: Vec<Cx>,
    f: Vec<Cx>,
    g: Vec<Cx>,
}

impl StructureBuilder {
    fn check(&self, k: usize, i: usize, j: usize) -> Result<()> {
        if k >= self.n || i >= self.n || j >= self.n {
            return Err(Error::Schema(format!("index ({k},{i},{j}) outside 0..{}", self.n)));
        }
        Ok(())
    }

    /// Adds c·φ_i∧φ_j to dφ_k.
    pub fn pp(mut self, k: usize, i: usize, j: usize, c: Cx) -> Result<Self> {
        self.check(k, i, j)?;
        if i == j {
            return Err(Error::Schema("φ_i∧φ_i term with i = j".into()));
        }
        let n = self.n;
        self.e[ix3(n, k, i, j)] += c;
        self.e[ix3(n, k, j, i)] -= c;
        Ok(self)
    }

    /// Adds c·φ_i∧φ̄_j to dφ_k.
    pub fn pm(mut self, k: usize, i: usize, j: usize, c: Cx) -> Result<Self> {
        self.check(k, i, j)?;
        let n = self.n;
        self.f[ix3(n, k, i, j)] += c;
        Ok(self)
    }

    /// Adds c·φ̄_i∧φ̄_j to dφ_k.
    pub fn mm(mut self, k: usize, i: usize, j: usize, c: Cx) -> Result<Self> {
        self.check(k, i, j)?;
        if i == j {
            return Err(Error::Schema("φ̄_i∧φ̄_i term with i = j".into()));
        }
        let n = self.n;
        self.g[ix3(n, k, i, j)] += c;
        self.g[ix3(n, k, j, i)] -= c;
        Ok(self)
    }

    pub fn build(self, name: &str) -> Result<StructureEquations> {
        // arrays are already antisymmetric, so the halving in from_arrays is exact
        StructureEquations::from_arrays(name, self.n, self.e, self.f, self.g)
    }
}

pub fn validate(s: &StructureEquations) -> ValidationReport {
    s.report.clone()
}

pub fn d(s: &StructureEquations, a: &InvariantForm) -> Result<InvariantForm> {
    s.ensure_validated()?;
    if a.n != s.n {
        return Err(Error::DimensionMismatch(format!("form on n = {} vs structure n = {}", a.n, s.n)));
    }
    Ok(s.d_unchecked(a))
}

/// (∂a, ∂̄a) for a form of pure bidegree.
pub fn dbar_del_split(s: &StructureEquations, a: &InvariantForm) -> Result<(InvariantForm, InvariantForm)> {
    s.ensure_complex()?;
    let (p, q) = a.bidegree().ok_or(Error::MixedBidegree)?;
    let da = d(s, a)?;
    Ok((da.part(p + 1, q), da.part(p, q + 1)))
}

/// ∂∂̄ of a pure form.
pub fn ddbar(s: &StructureEquations, a: &InvariantForm) -> Result<InvariantForm> {
    let (_, dbar) = dbar_del_split(s, a)?;
    let (del, _) = dbar_del_split(s, &dbar)?;
    Ok(del)
}

/// Max coefficient of ∂∂̄(ω^{n−1}).
pub fn gauduchon_check(s: &StructureEquations) -> Result<f64> {
    s.ensure_complex()?;
    let w = power(&omega(s.n), s.n - 1)?;
    Ok(ddbar(s, &w)?.max_abs())
}

/// Max coefficient of ∂∂̄ω.
pub fn pluriclosed_check(s: &StructureEquations) -> Result<f64> {
    s.ensure_complex()?;
    Ok(ddbar(s, &omega(s.n))?.max_abs())
}

/// Matrix of α∧β for 1-forms given by coefficient vectors.
pub(crate) fn wedge11(a: &[Cx], b: &[Cx]) -> CMatrix {
    let nn = a.len();
    CMatrix::from_fn(nn, nn, |i, j| a[i] * b[j] - b[i] * a[j])
}

/// Matrix of dα for a constant 1-form α.
pub(crate) fn d1(s: &StructureEquations, a: &[Cx]) -> CMatrix {
    let nn = 2 * s.n;
    let mut m = CMatrix::zeros(nn, nn);
    for (g, c) in a.iter().enumerate() {
        if *c != ZERO {
            m += s.d_generator(g) * *c;
        }
    }
    m
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{cx, ONE};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn n3() -> StructureEquations {
        StructureEquations::builder(3)
            .pm(2, 0, 0, ONE)
            .unwrap()
            .pm(2, 1, 1, -ONE)
            .unwrap()
            .build("N3")
            .unwrap()
    }

    fn random_form(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> InvariantForm {
        let mut items = Vec::new();
        for _ in 0..6 {
            let mut gens: Vec<usize> = (0..2 * n).collect();
            for i in (1..gens.len()).rev() {
                gens.swap(i, rng.gen_range(0..=i));
            }
            gens.truncate(degree);
            items.push((gens, cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
        InvariantForm::from_monomials(n, degree, &items).unwrap()
    }

    /// Sign of the permutation sorting `v` (distinct entries).
    fn perm_sign(v: &[usize]) -> f64 {
        let mut inv = 0;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                if v[a] > v[b] {
                    inv += 1;
                }
            }
        }
        if inv % 2 == 0 { 1.0 } else { -1.0 }
    }

    #[test]
    fn repeated_generator_vanishes() {
        let p = InvariantForm::phi(3, 0);
        assert!(wedge(&p, &p).unwrap().is_empty());
    }

    #[test]
    fn degree_one_anticommutes() {
        let a = InvariantForm::phi(2, 0);
        let b = InvariantForm::phibar(2, 0);
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        assert_eq!(ab.add(&ba).unwrap().len(), 0);
        assert_eq!(ab.coeff(&[0, 2]), ONE);
    }

    #[test]
    fn omega_cubed_by_brute_force() {
        // ω³ = 3! (√−1)³ φ1φ̄1φ2φ̄2φ3φ̄3; reorder the product to the sorted key
        let w3 = power(&omega(3), 3).unwrap();
        let order = [0, 3, 1, 4, 2, 5];
        let expect = cx(6.0, 0.0) * I * I * I * perm_sign(&order);
        assert_eq!(w3.len(), 1);
        assert!((w3.coeff(&[0, 1, 2, 3, 4, 5]) - expect).norm() < 1e-14);
    }

    #[test]
    fn abelian_d_vanishes() {
        let s = StructureEquations::abelian("flat", 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for deg in 0..=6 {
            assert!(d(&s, &random_form(&mut rng, 3, deg)).unwrap().is_empty());
        }
    }

    #[test]
    fn n3_generator_derivative() {
        let s = n3();
        let d3 = d(&s, &InvariantForm::phi(3, 2)).unwrap();
        let want = InvariantForm::from_monomials(3, 2, &[(vec![0, 3], ONE), (vec![1, 4], -ONE)]).unwrap();
        assert_eq!(d3, want);
        assert!(d(&s, &InvariantForm::phi(3, 0)).unwrap().is_empty());
    }

    #[test]
    fn n3_omega_split_recombines() {
        let s = n3();
        let w = omega(3);
        let dw = d(&s, &w).unwrap();
        assert!(dw.max_abs() > 0.5);
        let (del, dbar) = dbar_del_split(&s, &w).unwrap();
        assert_eq!(del.add(&dbar).unwrap(), dw);
        assert_eq!(del.bidegree(), Some((2, 1)));
        // ω is real, so ∂̄ω = conj(∂ω)
        assert!(dbar.sub(&del.conj()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn split_on_abelian_is_zero() {
        let s = StructureEquations::abelian("flat", 2).unwrap();
        let (a, b) = dbar_del_split(&s, &InvariantForm::phi(2, 0)).unwrap();
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn mixed_bidegree_is_rejected() {
        let s = n3();
        let f = InvariantForm::phi(3, 0).add(&InvariantForm::phibar(3, 1)).unwrap();
        assert!(matches!(dbar_del_split(&s, &f), Err(Error::MixedBidegree)));
    }

    #[test]
    fn validation_reports() {
        let s = n3();
        assert!(s.report().validated && s.report().integrable);
        let bad = StructureEquations::builder(3)
            .pm(0, 1, 2, ONE)
            .unwrap()
            .pm(2, 0, 0, ONE)
            .unwrap()
            .build("bad")
            .unwrap();
        // d(dφ_1) = d(φ_2∧φ̄_3) = −φ_2∧dφ̄_3 = −φ_2∧φ̄_1∧φ_1 ≠ 0
        let r = validate(&bad);
        assert!(!r.validated);
        assert!((r.d2_residual - 1.0).abs() < 1e-14);
        assert!(matches!(d(&bad, &omega(3)), Err(Error::NotValidated { .. })));
        let g = StructureEquations::builder(3).mm(2, 0, 1, ONE).unwrap().build("g").unwrap();
        assert!(g.report().validated && !g.report().integrable);
        assert!(matches!(gauduchon_check(&g), Err(Error::NotIntegrable)));
    }

    #[test]
    fn abelian_checks_vanish() {
        let s = StructureEquations::abelian("flat", 4).unwrap();
        assert_eq!(gauduchon_check(&s).unwrap(), 0.0);
        assert_eq!(pluriclosed_check(&s).unwrap(), 0.0);
    }

    #[test]
    fn pluriclosed_residual_of_the_threefold_family() {
        // hand expansion: ∂∂̄ω = √−1·dφ_3∧dφ̄_3 = −√−1·2Re(a b̄)·φ1φ̄1φ2φ̄2
        for (a, b) in [(ONE, I), (ONE, ONE), (cx(0.5, 1.0), cx(-2.0, 0.3))] {
            let s = StructureEquations::builder(3).pm(2, 0, 0, a).unwrap().pm(2, 1, 1, b).unwrap().build("f").unwrap();
            let want = 2.0 * (a * b.conj()).re.abs();
            assert!((pluriclosed_check(&s).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn two_form_matrix_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_form(&mut rng, 3, 2);
        let g = InvariantForm::from_two_form(3, &f.two_form_matrix().unwrap());
        assert_eq!(f, g);
        let v: Vec<Cx> = (0..6).map(|k| cx(k as f64, 1.0)).collect();
        assert_eq!(InvariantForm::from_one_form(3, &v).one_form_coeffs().unwrap(), v);
    }

    fn random_structure(rng: &mut ChaCha8Rng, n: usize) -> StructureEquations {
        // 2-step: dφ_α ∈ span{φ_iφ_j, φ_iφ̄_j : i, j < r}
        let r = rng.gen_range(1..n);
        let mut b = StructureEquations::builder(n);
        for k in r..n {
            for i in 0..r {
                for j in 0..r {
                    b = b.pm(k, i, j, cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
                    if i < j {
                        b = b.pp(k, i, j, cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
                    }
                }
            }
        }
        b.build("rand").unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn d_squared_vanishes(seed in 0u64..10_000, n in 2usize..5, deg in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&mut rng, n);
            let deg = deg.min(2 * n);
            let f = random_form(&mut rng, n, deg);
            let dd = d(&s, &d(&s, &f).unwrap()).unwrap();
            prop_assert!(dd.max_abs() < 1e-12);
        }

        #[test]
        fn d_commutes_with_conjugation(seed in 0u64..10_000, n in 2usize..5, deg in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&mut rng, n);
            let f = random_form(&mut rng, n, deg.min(2 * n));
            let lhs = d(&s, &f).unwrap().conj();
            let rhs = d(&s, &f.conj()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);
        }

        #[test]
        fn del_dbar_anticommute(seed in 0u64..10_000, n in 2usize..4, p in 0usize..3, q in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&mut rng, n);
            let f = random_form(&mut rng, n, p + q).part(p, q);
            let (del, dbar) = dbar_del_split(&s, &f).unwrap();
            let a = dbar_del_split(&s, &dbar).unwrap().0;
            let b = dbar_del_split(&s, &del).unwrap().1;
            prop_assert!(a.add(&b).unwrap().max_abs() < 1e-13);
        }

        #[test]
        fn wedge_is_graded_commutative(seed in 0u64..10_000, p in 0usize..4, q in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_form(&mut rng, 3, p);
            let b = random_form(&mut rng, 3, q);
            let sign = if (p * q) % 2 == 0 { ONE } else { -ONE };
            let ab = wedge(&a, &b).unwrap();
            let ba = wedge(&b, &a).unwrap().scale(sign);
            prop_assert!(ab.sub(&ba).unwrap().max_abs() < 1e-14);
        }

        #[test]
        fn leibniz_rule(seed in 0u64..10_000, p in 0usize..4, q in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&mut rng, 3);
            let a = random_form(&mut rng, 3, p);
            let b = random_form(&mut rng, 3, q);
            let lhs = d(&s, &wedge(&a, &b).unwrap()).unwrap();
            let sign = if p % 2 == 0 { ONE } else { -ONE };
            let rhs = wedge(&d(&s, &a).unwrap(), &b).unwrap()
                .add(&wedge(&a, &d(&s, &b).unwrap()).unwrap().scale(sign)).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);
        }

        #[test]
        fn gauduchon_equals_pluriclosed_on_surfaces(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&mut rng, 2);
            prop_assert!((gauduchon_check(&s).unwrap() - pluriclosed_check(&s).unwrap()).abs() < 1e-14);
        }
    }
}
