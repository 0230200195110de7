//! Named example structures and a seeded generator of random 2-step ones.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forms::StructureEquations;
use crate::tensor::{cx, Cx, I, ONE, ZERO};

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub s: StructureEquations,
    /// Only the flags the literature asserts for this example.
    pub expected: BTreeMap<String, bool>,
    pub notes: String,
}

fn expect(pairs: &[(&str, bool)]) -> BTreeMap<String, bool> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn entry(s: StructureEquations, expected: BTreeMap<String, bool>, notes: &str) -> Result<CatalogEntry> {
    if !s.is_integrable() {
        return Err(Error::ValidationFailed(format!(
            "{}: d^2 residual {:e} on generator {}",
            s.name(),
            s.report().d2_residual,
            s.report().worst_generator
        )));
    }
    Ok(CatalogEntry { name: s.name().to_string(), s, expected, notes: notes.to_string() })
}

/// dφ_i = 0 for i < r, dφ_α = Σ_i Y[α−r][i] φ_i∧φ̄_i.
pub fn nilmanifold(r: usize, n: usize, y: &[Vec<Cx>]) -> Result<StructureEquations> {
    if r == 0 || r > n {
        return Err(Error::ShapeMismatch(format!("r = {r} outside 1..={n}")));
    }
    if y.len() != n - r || y.iter().any(|row| row.len() != r) {
        return Err(Error::ShapeMismatch(format!("Y must be {}x{r}", n - r)));
    }
    let mut b = StructureEquations::builder(n);
    for (alpha, row) in y.iter().enumerate() {
        for (i, c) in row.iter().enumerate() {
            b = b.pm(r + alpha, i, i, *c)?;
        }
    }
    b.build(&format!("nilmanifold_r{r}_n{n}"))
}

pub fn abelian(n: usize) -> Result<CatalogEntry> {
    let s = StructureEquations::abelian(&format!("abelian{n}"), n)?;
    let all: Vec<(&str, bool)> = ["balanced", "btp", "bkl", "vaisman", "pluriclosed", "gauduchon", "kahler"]
        .iter()
        .map(|k| (*k, true))
        .collect();
    entry(s, expect(&all), "flat Kähler torus")
}

pub fn n3_example() -> Result<CatalogEntry> {
    let s = StructureEquations::builder(3).pm(2, 0, 0, ONE)?.pm(2, 1, 1, -ONE)?.build("n3")?;
    entry(
        s,
        expect(&[("balanced", true), ("btp", true), ("bkl", false), ("vaisman", false)]),
        "dφ_3 = φ_1∧φ̄_1 − φ_2∧φ̄_2",
    )
}

/// dφ_3 = a φ_1∧φ̄_1 + b φ_2∧φ̄_2.
pub fn family_ab(a: Cx, b: Cx) -> Result<CatalogEntry> {
    if a.norm() == 0.0 {
        return Err(Error::InvalidParameter("a must be nonzero".into()));
    }
    let close = |x: Cx, y: Cx| (x - y).norm() < 1e-12;
    let s = StructureEquations::builder(3)
        .pm(2, 0, 0, a)?
        .pm(2, 1, 1, b)?
        .build(&format!("family_ab({},{})", fmt_cx(a), fmt_cx(b)))?;
    entry(
        s,
        expect(&[
            ("balanced", close(b, -a)),
            ("bkl", (a * b.conj()).re.abs() < 1e-12),
            ("vaisman", close(b, a)),
            ("btp", true),
        ]),
        "dφ_3 = aφ_1∧φ̄_1 + bφ_2∧φ̄_2",
    )
}

fn fmt_cx(z: Cx) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// dφ_1 = φ_2∧φ_3 and cyclic.
pub fn complexified_su2() -> Result<CatalogEntry> {
    let s = StructureEquations::builder(3).pp(0, 1, 2, ONE)?.pp(1, 2, 0, ONE)?.pp(2, 0, 1, ONE)?.build("su2")?;
    entry(
        s,
        expect(&[("balanced", true), ("btp", true), ("chern_flat", true)]),
        "complex simple group SL(2,C) with its canonical metric",
    )
}

pub fn ricq_counterexample5() -> Result<CatalogEntry> {
    let y = vec![vec![cx(1.0, 2.0), cx(1.0, -1.0), cx(1.0, -1.0), I]];
    let s = nilmanifold(4, 5, &y)?.with_name("ricq5");
    entry(
        s,
        expect(&[("btp", true), ("ric_q_zero", true), ("q_nonzero", true)]),
        "Ric(Q) = 0 while Q ≠ 0",
    )
}

/// n = 4 nilmanifold whose rows make Q vanish.
pub fn nil4_bkl() -> Result<CatalogEntry> {
    let y = vec![vec![ONE, I], vec![cx(2.0, 0.0), cx(0.0, 2.0)]];
    let s = nilmanifold(2, 4, &y)?.with_name("nil4_bkl");
    entry(s, expect(&[("btp", true), ("balanced", false)]), "two central directions over C^2")
}

/// Invariant model of a twisted product of two Sasakian 3-manifolds with
/// κ = x + √−1 y. `sigma` adds (σ_i φ_3 − conj(σ_i) φ̄_3)∧φ_i to dφ_i.
pub fn twisted_sasakian_model(c1: f64, c2: f64, kappa: Cx, sigma: [Cx; 2]) -> Result<CatalogEntry> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidParameter("c1 and c2 must be positive".into()));
    }
    if kappa.im.is_nan() || kappa.im <= 0.0 {
        return Err(Error::InvalidParameter("Im(kappa) must be positive".into()));
    }
    let (x, y) = (kappa.re, kappa.im);
    let r2 = std::f64::consts::SQRT_2;
    // coefficient s of (s φ_3 − conj(s) φ̄_3)∧φ_i in dφ_i
    let s1 = cx(x, 1.0) * (c1 / r2) + sigma[0];
    let s2 = cx(c2 * y / r2, 0.0) + sigma[1];
    let mut b = StructureEquations::builder(3);
    for (i, s) in [(0usize, s1), (1, s2)] {
        // s φ_3∧φ_i − conj(s) φ̄_3∧φ_i = −s φ_i∧φ_3 + conj(s) φ_i∧φ̄_3
        b = b.pp(i, i, 2, -s)?.pm(i, i, 2, s.conj())?;
    }
    b = b.pm(2, 0, 0, I * (r2 * c1))?.pm(2, 1, 1, -cx(1.0, x) * (r2 * c2 / y))?;
    let name = format!("twisted_sasakian({c1},{c2},{})", fmt_cx(kappa));
    let s = b.build(&name)?;
    entry(s, expect(&[("btp", true), ("balanced", false)]), "twisted Sasakian product model")
}

/// Seeded random 2-step structure: dφ_i = 0 for i < r and dφ_α drawn from
/// span{φ_iφ_j, φ_iφ̄_j : i, j < r}, each slot kept with probability `density`.
pub fn random_2step(seed: u64, n: usize, r: usize, density: f64) -> Result<StructureEquations> {
    if r == 0 || r >= n {
        return Err(Error::InvalidParameter(format!("r = {r} must lie in 1..{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Option<Cx> {
        let keep = rng.gen::<f64>() < density;
        let z = cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        keep.then_some(z)
    };
    let mut b = StructureEquations::builder(n);
    for k in r..n {
        for i in 0..r {
            for j in 0..r {
                if let Some(z) = draw(&mut rng) {
                    b = b.pm(k, i, j, z)?;
                }
                if i < j {
                    if let Some(z) = draw(&mut rng) {
                        b = b.pp(k, i, j, z)?;
                    }
                }
            }
        }
    }
    b.build(&format!("random_2step(seed={seed},n={n},r={r})"))
}

/// The sweep population: seeds 0.. cycling over n ∈ {2,3,4,5} and r ∈ 1..n.
pub fn random_population(count: usize, base_seed: u64) -> Vec<StructureEquations> {
    (0..count)
        .map(|k| {
            let n = 2 + k % 4;
            let r = 1 + (k / 4) % (n - 1);
            random_2step(base_seed + k as u64, n, r, 0.7).expect("parameters are in range")
        })
        .collect()
}

/// Every preset entry.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut out = vec![abelian(2), abelian(3), n3_example(), complexified_su2(), ricq_counterexample5(), nil4_bkl()];
    for b in [cx(2.0, 0.0), I, ONE, -ONE, cx(1.0, 1.0), ZERO, cx(-0.5, 2.0)] {
        out.push(family_ab(ONE, b));
    }
    out.push(twisted_sasakian_model(1.0, 1.0, I, [ZERO; 2]));
    out.push(twisted_sasakian_model(1.0, 1.0, cx(1.0, 1.0), [ZERO; 2]));
    out.into_iter().map(|e| e.expect("preset entries validate")).collect()
}

pub fn names() -> Vec<&'static str> {
    vec!["abelian", "n3", "family_ab", "su2", "ricq5", "nil4_bkl", "nilmanifold", "twisted_sasakian", "random_2step"]
}

/// Looks up an entry by name with `key=value` parameters.
pub fn lookup(name: &str, params: &BTreeMap<String, String>) -> Result<StructureEquations> {
    let real = |k: &str, default: f64| -> Result<f64> {
        params.get(k).map_or(Ok(default), |v| {
            v.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("{k}={v} is not a number")))
        })
    };
    let int = |k: &str, default: usize| -> Result<usize> {
        params.get(k).map_or(Ok(default), |v| {
            v.parse::<usize>().map_err(|_| Error::InvalidParameter(format!("{k}={v} is not an integer")))
        })
    };
    let s = match name {
        "abelian" => abelian(int("n", 3)?)?.s,
        "n3" => n3_example()?.s,
        "family_ab" => {
            family_ab(cx(real("a_re", 1.0)?, real("a_im", 0.0)?), cx(real("b_re", 2.0)?, real("b_im", 0.0)?))?.s
        }
        "su2" => complexified_su2()?.s,
        "ricq5" => ricq_counterexample5()?.s,
        "nil4_bkl" => nil4_bkl()?.s,
        "nilmanifold" => {
            let (r, n) = (int("r", 2)?, int("n", 3)?);
            let mut y = vec![vec![ZERO; r]; n.saturating_sub(r)];
            for (a, row) in y.iter_mut().enumerate() {
                for (i, z) in row.iter_mut().enumerate() {
                    *z = cx(real(&format!("y{}_{}_re", a + 1, i + 1), 1.0)?, real(&format!("y{}_{}_im", a + 1, i + 1), 0.0)?);
                }
            }
            nilmanifold(r, n, &y)?
        }
        "twisted_sasakian" => {
            let sigma = [
                cx(real("s1_re", 0.0)?, real("s1_im", 0.0)?),
                cx(real("s2_re", 0.0)?, real("s2_im", 0.0)?),
            ];
            twisted_sasakian_model(
                real("c1", 1.0)?,
                real("c2", 1.0)?,
                cx(real("kappa_re", 0.0)?, real("kappa_im", 1.0)?),
                sigma,
            )?
            .s
        }
        "random_2step" => {
            random_2step(int("seed", 1)? as u64, int("n", 4)?, int("r", 2)?, real("density", 0.7)?)?
        }
        other => return Err(Error::InvalidParameter(format!("unknown catalog entry {other}"))),
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use proptest::prelude::*;

    #[test]
    fn presets_validate() {
        for e in catalog() {
            assert!(e.s.is_integrable(), "{}", e.name);
        }
    }

    #[test]
    fn full_rank_nilmanifold_is_abelian() {
        let s = nilmanifold(3, 3, &[]).unwrap();
        assert_eq!(s.max_coefficient(), 0.0);
    }

    #[test]
    fn nilmanifold_shape_is_checked() {
        assert!(matches!(nilmanifold(2, 3, &[vec![ONE]]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(nilmanifold(0, 3, &[]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn ricq_rows_satisfy_the_vanishing_condition() {
        // Σ_{k≠i} 2Re(Y_i conj(Y_k)) = 0 for each i
        let y = [cx(1.0, 2.0), cx(1.0, -1.0), cx(1.0, -1.0), I];
        for i in 0..4 {
            let s: f64 = (0..4).filter(|&k| k != i).map(|k| 2.0 * (y[i] * y[k].conj()).re).sum();
            assert!(s.abs() < 1e-14, "row {i}: {s}");
        }
    }

    #[test]
    fn family_requires_nonzero_a() {
        assert!(matches!(family_ab(ZERO, ONE), Err(Error::InvalidParameter(_))));
        assert!(family_ab(ONE, -ONE).unwrap().expected["balanced"]);
    }

    #[test]
    fn twisted_model_parameters() {
        // d² = 0 needs Re(σ_1·k) = 0 with k the φ_2∧φ̄_2 coefficient of dφ_3, and σ_2 real
        let kappa = cx(0.3, 2.0);
        let k = -cx(1.0, kappa.re) * (std::f64::consts::SQRT_2 / kappa.im);
        assert!(twisted_sasakian_model(1.0, 1.0, kappa, [I * 0.4 / k, cx(0.2, 0.0)]).is_ok());
        let bad = twisted_sasakian_model(1.0, 1.0, kappa, [cx(0.2, 0.0), ZERO]);
        assert!(matches!(bad, Err(Error::ValidationFailed(_))));
        assert!(matches!(twisted_sasakian_model(1.0, 1.0, ONE, [ZERO; 2]), Err(Error::InvalidParameter(_))));
        assert!(matches!(twisted_sasakian_model(0.0, 1.0, I, [ZERO; 2]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_density_is_abelian() {
        assert_eq!(random_2step(9, 4, 2, 0.0).unwrap().max_coefficient(), 0.0);
    }

    #[test]
    fn equal_seeds_give_equal_structures() {
        assert_eq!(random_2step(1, 4, 2, 0.7).unwrap(), random_2step(1, 4, 2, 0.7).unwrap());
        assert_ne!(random_2step(1, 4, 2, 0.7).unwrap(), random_2step(2, 4, 2, 0.7).unwrap());
    }

    #[test]
    fn su2_is_chern_flat_and_balanced() {
        let e = Engine::new(&complexified_su2().unwrap().s).unwrap();
        assert_eq!(e.chern().max_abs(), 0.0);
        assert!(e.chern_curvature().r11.max_abs() < 1e-15);
        assert!(e.eta_norm() < 1e-15);
    }

    #[test]
    fn lookup_accepts_parameters() {
        let mut p = BTreeMap::new();
        p.insert("b_im".to_string(), "1".to_string());
        p.insert("b_re".to_string(), "0".to_string());
        let s = lookup("family_ab", &p).unwrap();
        assert_eq!(s.f(2, 1, 1), I);
        assert!(lookup("nope", &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn random_structures_always_validate(seed in 0u64..1_000_000, n in 2usize..6, r in 1usize..5, density in 0.0f64..1.0) {
            let r = r.min(n - 1);
            let s = random_2step(seed, n, r, density).unwrap();
            prop_assert!(s.is_integrable());
        }
    }
}
