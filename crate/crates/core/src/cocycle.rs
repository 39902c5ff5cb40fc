//! Crossing counts and the basis of shift-invariant Markov cocycles on `X_r`.
//!
//! For a homoclinic pair with lifts `x̂, ŷ` agreeing outside a finite set,
//! `M_i(x, y) = Σ_n N_i(x̂_n, ŷ_n)` counts, with sign, how often the height at
//! each site crosses a level of residue `i` on its way from `x̂_n` to `ŷ_n`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::height::{lift_pair, lift_sites};
use crate::lattice::{make_pair, Configuration, HomoclinicPair, LatticeVector, Window};
use crate::scalar::Scalar;

/// `N_i(a, b)`: for `a ≤ b`, the number of `m ∈ [a, b)` with `m ≡ a (mod 2)`
/// and `m ≡ i (mod r)`; for `a > b`, `-N_i(b, a)`.
pub fn crossing_count(i: u32, a: i64, b: i64, r: u32) -> i64 {
    if a > b {
        return -crossing_count(i, b, a, r);
    }
    let r = r as i64;
    let target = (i as i64).rem_euclid(r);
    let mut m = a;
    let mut count = 0;
    while m < b {
        if m.rem_euclid(r) == target {
            count += 1;
        }
        m += 2;
    }
    count
}

/// Coefficients `α_0, …, α_{r-1}` of `M = Σ α_i M_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alphas<T> {
    pub r: u32,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Alphas<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        let r = coeffs.len() as u32;
        check_basis_r(r)?;
        Ok(Alphas { r, coeffs })
    }

    pub fn sum(&self) -> T {
        self.coeffs.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// `α_i` with the index taken mod `r`.
    pub fn at(&self, i: i64) -> T {
        self.coeffs[i.rem_euclid(self.r as i64) as usize].clone()
    }

    /// Evaluates `Σ α_i M_i` on precomputed basis values.
    pub fn apply(&self, basis: &[i64]) -> T {
        self.coeffs
            .iter()
            .zip(basis)
            .fold(T::zero(), |acc, (a, &m)| acc + a.clone() * T::from_i64(m))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_basis_r(self.r)?;
        if self.coeffs.len() != self.r as usize {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                self.r,
                self.coeffs.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_basis_r(r: u32) -> Result<()> {
    if r <= 2 || r == 4 {
        return Err(Error::UnsupportedModel(format!(
            "the crossing-count basis needs r outside {{1, 2, 4}}, got {r}"
        )));
    }
    Ok(())
}

/// Basis values `M_0, …, M_{r-1}` of a pair and the total height change
/// `M̂ = Σ_n (ŷ_n - x̂_n)`, which always equals `2 Σ_i M_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub basis: Vec<i64>,
    pub hat: i64,
}

fn counts_from_heights(r: u32, xh: &[i64], yh: &[i64]) -> CocycleReport {
    let mut basis = vec![0; r as usize];
    let mut hat = 0;
    for (&a, &b) in xh.iter().zip(yh) {
        if a == b {
            continue;
        }
        hat += b - a;
        for (i, m) in basis.iter_mut().enumerate() {
            *m += crossing_count(i as u32, a, b, r);
        }
    }
    CocycleReport { basis, hat }
}

pub fn basis_eval(pair: &HomoclinicPair) -> Result<CocycleReport> {
    check_basis_r(pair.r())?;
    let (xh, yh) = lift_pair(pair)?;
    Ok(counts_from_heights(pair.r(), &xh.values, &yh.values))
}

/// Basis values for two fillings of an explicit site set that must agree
/// wherever `fixed` is set; both are lifted from `sites[base]` with a common value.
pub fn basis_eval_sites(
    r: u32,
    sites: &[LatticeVector],
    x: &[u32],
    y: &[u32],
    fixed: &[bool],
    base: usize,
) -> Result<CocycleReport> {
    check_basis_r(r)?;
    if !fixed[base] || x[base] != y[base] {
        return Err(invalid("the lifting base must be a shared fixed site"));
    }
    let xh = lift_sites(r, sites, x, base, x[base] as i64)?;
    let yh = lift_sites(r, sites, y, base, x[base] as i64)?;
    if let Some(i) = (0..sites.len()).find(|&i| fixed[i] && xh[i] != yh[i]) {
        return Err(Error::NotHomoclinic(sites[i].clone()));
    }
    Ok(counts_from_heights(r, &xh, &yh))
}

/// `M(x, y) = Σ_i α_i M_i(x, y)`.
pub fn eval<T: Scalar>(alphas: &Alphas<T>, pair: &HomoclinicPair) -> Result<T> {
    alphas.validate()?;
    if alphas.r != pair.r() {
        return Err(invalid("alphas and pair use different r"));
    }
    Ok(alphas.apply(&basis_eval(pair)?.basis))
}

/// `M = M_0 + c M̂` with `M_0 = Σ β_i M_i` in the Gibbs subspace `Σβ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<T> {
    pub c: T,
    pub beta: Vec<T>,
    pub is_gibbs: bool,
}

/// Splits `M = Σ α_i M_i` as `Σ β_i M_i + c M̂` with `c = Σα / (2r)` and
/// `β_i = α_i - Σα / r`, using `M̂ = 2 Σ M_i`.
pub fn decompose<T: Scalar>(alphas: &Alphas<T>) -> Result<Decomposition<T>> {
    alphas.validate()?;
    let sum = alphas.sum();
    let r = T::from_i64(alphas.r as i64);
    let mean = sum.clone() / r.clone();
    let c = sum.clone() / (T::from_i64(2) * r);
    let beta = alphas.coeffs.iter().map(|a| a.clone() - mean.clone()).collect();
    Ok(Decomposition {
        c,
        beta,
        is_gibbs: sum.is_negligible(),
    })
}

/// The single-site pivot pair at `site`: `x̂_n = i + ‖n - site‖₁` on `window`
/// (so `x = i` at `site` and `i + 1` on its neighbours) and `y` equal to `x`
/// except `y = i + 2` at `site`. `M_j(x, y) = δ_{ij}`.
pub fn pivot_pair(window: &Window, r: u32, site: &LatticeVector, i: u32) -> Result<HomoclinicPair> {
    let x = Configuration::from_fn(window.clone(), r, |s| i as i64 + s.l1_dist(site));
    let mut y = x.clone();
    y.set(site, (i + 2) % r)?;
    make_pair(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn crossing_count_examples() {
        assert_eq!(crossing_count(0, 0, 6, 3), 1);
        assert_eq!(crossing_count(1, 0, 6, 3), 1);
        assert_eq!(crossing_count(2, 0, 6, 3), 1);
        assert_eq!(crossing_count(0, 6, 0, 3), -1);
        assert_eq!(crossing_count(1, 1, 3, 5), 1);
        assert_eq!(crossing_count(2, 1, 3, 5), 0);
    }

    #[test]
    fn single_pivot_gives_unit_vector() {
        let w = Window::centered(&[5, 5]).unwrap();
        for r in [3, 5, 6] {
            for i in 0..r {
                let p = pivot_pair(&w, r, &LatticeVector::zero(2), i).unwrap();
                let rep = basis_eval(&p).unwrap();
                for j in 0..r {
                    assert_eq!(rep.basis[j as usize], (i == j) as i64);
                }
                assert_eq!(rep.hat, 2);
            }
        }
    }

    #[test]
    fn decompose_rational() {
        let a = Alphas::new(vec![
            Rational64::from_integer(1),
            Rational64::from_integer(1),
            Rational64::from_integer(1),
        ])
        .unwrap();
        let d = decompose(&a).unwrap();
        assert_eq!(d.c, Rational64::new(1, 2));
        assert!(d.beta.iter().all(|b| *b == Rational64::from_integer(0)));
        assert!(!d.is_gibbs);
        let g = Alphas::new(vec![
            Rational64::from_integer(1),
            Rational64::from_integer(-1),
            Rational64::from_integer(0),
        ])
        .unwrap();
        let d = decompose(&g).unwrap();
        assert!(d.is_gibbs);
        assert_eq!(d.beta, g.coeffs);
    }

    #[test]
    fn r_four_has_no_basis() {
        assert!(matches!(
            Alphas::new(vec![0.0; 4]),
            Err(Error::UnsupportedModel(_))
        ));
    }
}
