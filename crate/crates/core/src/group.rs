//! Finite Abelian groups as direct sums of cyclic factors.
//!
//! Elements are addressed by a mixed-radix index with the first factor most
//! significant, so `Z2xZ3` orders its elements (0,0),(0,1),(0,2),(1,0),...

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, Error, Result};

/// A finite Abelian group `Z_{n_1} + ... + Z_{n_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    factors: Vec<usize>,
    order: usize,
    exponent: usize,
}

/// A group element as one digit per cyclic factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub digits: Vec<usize>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl GroupSpec {
    /// Builds a group from cyclic factor orders. Factors equal to 1 are dropped.
    pub fn new(factor_orders: &[i64]) -> Result<Self> {
        let mut factors = Vec::with_capacity(factor_orders.len());
        for &n in factor_orders {
            if n < 1 {
                return validation(format!("cyclic factor order must be positive, got {n}"));
            }
            if n > 1 {
                factors.push(n as usize);
            }
        }
        let order = factors.iter().product::<usize>();
        let exponent = factors.iter().fold(1, |acc, &n| acc / gcd(acc, n) * n);
        Ok(GroupSpec {
            factors,
            order,
            exponent,
        })
    }

    pub fn cyclic(n: usize) -> Self {
        GroupSpec::new(&[n as i64]).expect("positive order")
    }

    pub fn z2() -> Self {
        GroupSpec::cyclic(2)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Number of elements, which is also the physical dimension of a spin.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Least common multiple of the factor orders.
    pub fn exponent(&self) -> usize {
        self.exponent
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.factors.len()];
        let mut rest = index;
        for (d, &n) in digits.iter_mut().zip(&self.factors).rev() {
            *d = rest % n;
            rest /= n;
        }
        digits
    }

    pub fn element(&self, index: usize) -> GroupElement {
        GroupElement {
            digits: self.digits(index),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            digits: vec![0; self.factors.len()],
        }
    }

    /// Index of an element, checking that it belongs to this group.
    pub fn encode(&self, g: &GroupElement) -> Result<usize> {
        if g.digits.len() != self.factors.len() {
            return validation(format!(
                "element {:?} has {} digits but the group {} has {} factors",
                g.digits,
                g.digits.len(),
                self,
                self.factors.len()
            ));
        }
        let mut index = 0;
        for (&d, &n) in g.digits.iter().zip(&self.factors) {
            if d >= n {
                return validation(format!("digit {d} out of range for Z{n}"));
            }
            index = index * n + d;
        }
        Ok(index)
    }

    /// Sum of two elements given by index.
    pub fn add(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        for &n in self.factors.iter().rev() {
            out += ((a % n + b % n) % n) * place;
            place *= n;
            a /= n;
            b /= n;
        }
        out
    }

    /// Inverse of an element given by index.
    pub fn neg(&self, a: usize) -> usize {
        let mut a = a;
        let mut out = 0;
        let mut place = 1;
        for &n in self.factors.iter().rev() {
            out += ((n - a % n) % n) * place;
            place *= n;
            a /= n;
        }
        out
    }

    pub fn is_self_inverse(&self, a: usize) -> bool {
        self.add(a, a) == 0
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        let (a, b) = (self.encode(g)?, self.encode(h)?);
        Ok(self.element(self.add(a, b)))
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        let a = self.encode(g)?;
        Ok(self.element(self.neg(a)))
    }

    /// All elements with `g + g = 0`, in index order.
    pub fn self_inverse_elements(&self) -> Vec<GroupElement> {
        (0..self.order)
            .filter(|&a| self.is_self_inverse(a))
            .map(|a| self.element(a))
            .collect()
    }

    pub fn self_inverse_count(&self) -> usize {
        (0..self.order).filter(|&a| self.is_self_inverse(a)).count()
    }

    /// The character `chi_j(k) = prod_i exp(2 pi i j_i k_i / n_i)`.
    pub fn character(&self, j: usize, k: usize) -> Complex64 {
        let (dj, dk) = (self.digits(j), self.digits(k));
        let mut phase = 0.0;
        for ((&a, &b), &n) in dj.iter().zip(&dk).zip(&self.factors) {
            phase += ((a * b) % n) as f64 / n as f64;
        }
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    }

    pub fn fourier_matrix(&self) -> FourierMatrix {
        let d = self.order;
        let mut entries = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                entries.push(self.character(j, k));
            }
        }
        FourierMatrix { order: d, entries }
    }

    /// Splits the group into its cyclic factors.
    pub fn cyclic_factors(&self) -> Vec<GroupSpec> {
        self.factors.iter().map(|&n| GroupSpec::cyclic(n)).collect()
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "Z1");
        }
        let parts: Vec<String> = self.factors.iter().map(|n| format!("Z{n}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses literals such as `Z2`, `z2xZ3xZ4` or `Z1`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower.is_empty() {
            return validation("empty group literal");
        }
        let mut orders = Vec::new();
        for part in lower.split('x') {
            let digits = part
                .trim()
                .strip_prefix('z')
                .ok_or_else(|| Error::Validation(format!("bad group literal {s:?}: expected factors like Z2")))?;
            let n: i64 = digits
                .parse()
                .map_err(|_| Error::Validation(format!("bad cyclic order {digits:?} in {s:?}")))?;
            orders.push(n);
        }
        GroupSpec::new(&orders)
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unnormalized character table, `H H* = |G| I`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMatrix {
    pub order: usize,
    pub entries: Vec<Complex64>,
}

impl FourierMatrix {
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.order + k]
    }
}

/// F-symbols of the string-net built from an Abelian group, stored as a dense table.
///
/// `F^{ijm}_{kln}` is 1 when the triads {i,j,m}, {k,l,m*}, {i,n,l} and {j,k,n*}
/// all sum to the identity.
#[derive(Clone, Debug)]
pub struct FSymbols {
    group: GroupSpec,
    table: Vec<u8>,
}

/// Result of enumerating the pentagon equation.
#[derive(Clone, Debug, PartialEq)]
pub struct PentagonReport {
    pub holds: bool,
    /// Labels (m, l, q, k, p, j, i, s, r) of the first violated instance.
    pub counterexample: Option<[usize; 9]>,
    pub instances: u64,
}

pub const DEFAULT_PENTAGON_MAX_ORDER: usize = 6;

impl FSymbols {
    pub fn new(group: &GroupSpec) -> Self {
        let d = group.order();
        let mut table = vec![0u8; d.pow(6)];
        for (idx, v) in table.iter_mut().enumerate() {
            let l = labels6(idx, d);
            *v = f_symbol_index(group, l[0], l[1], l[2], l[3], l[4], l[5]);
        }
        FSymbols {
            group: group.clone(),
            table,
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    fn offset(&self, l: [usize; 6]) -> usize {
        let d = self.group.order();
        l.iter().fold(0, |acc, &x| acc * d + x)
    }

    pub fn get(&self, i: usize, j: usize, m: usize, k: usize, l: usize, n: usize) -> u8 {
        self.table[self.offset([i, j, m, k, l, n])]
    }

    pub fn set(&mut self, labels: [usize; 6], value: u8) {
        let o = self.offset(labels);
        self.table[o] = value;
    }

    /// Enumerates every label assignment of the pentagon equation
    /// `sum_n F^{mlq}_{kp*n} F^{jip}_{mns*} F^{js*n}_{lkr*} = F^{jip}_{q*kr*} F^{riq*}_{mls*}`.
    pub fn pentagon_check(&self, max_order: usize) -> Result<PentagonReport> {
        let d = self.group.order();
        if d > max_order {
            return Err(Error::Budget(format!(
                "pentagon enumeration over |G| = {d} exceeds the guard |G| <= {max_order}"
            )));
        }
        let inv = |a: usize| self.group.neg(a);
        let mut instances = 0u64;
        for idx in 0..d.pow(9) {
            let mut rest = idx;
            let mut lab = [0usize; 9];
            for slot in lab.iter_mut().rev() {
                *slot = rest % d;
                rest /= d;
            }
            let [m, l, q, k, p, j, i, s, r] = lab;
            let mut lhs = 0u32;
            for n in 0..d {
                lhs += (self.get(m, l, q, k, inv(p), n) as u32)
                    * (self.get(j, i, p, m, n, inv(s)) as u32)
                    * (self.get(j, inv(s), n, l, k, inv(r)) as u32);
            }
            let rhs = (self.get(j, i, p, inv(q), k, inv(r)) as u32) * (self.get(r, i, inv(q), m, l, inv(s)) as u32);
            instances += 1;
            if lhs != rhs {
                return Ok(PentagonReport {
                    holds: false,
                    counterexample: Some(lab),
                    instances,
                });
            }
        }
        Ok(PentagonReport {
            holds: true,
            counterexample: None,
            instances,
        })
    }

    /// Checks `T_{ijk} = F^{ijk}_{j* i* 0}` with unit quantum dimensions.
    pub fn branching_consistency(&self) -> bool {
        let g = &self.group;
        let d = g.order();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let t = branching(g, i, j, k);
                    if t != self.get(i, j, k, g.neg(j), g.neg(i), 0) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn labels6(idx: usize, d: usize) -> [usize; 6] {
    let mut out = [0; 6];
    let mut rest = idx;
    for slot in out.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    out
}

/// Branching tensor: 1 when the three labels sum to the identity.
pub fn branching(group: &GroupSpec, a: usize, b: usize, c: usize) -> u8 {
    (group.add(group.add(a, b), c) == 0) as u8
}

fn f_symbol_index(g: &GroupSpec, i: usize, j: usize, m: usize, k: usize, l: usize, n: usize) -> u8 {
    branching(g, i, j, m) & branching(g, k, l, g.neg(m)) & branching(g, i, n, l) & branching(g, j, k, g.neg(n))
}

/// Value of a single F-symbol `F^{ijm}_{kln}`.
pub fn f_symbol(
    group: &GroupSpec,
    i: &GroupElement,
    j: &GroupElement,
    m: &GroupElement,
    k: &GroupElement,
    l: &GroupElement,
    n: &GroupElement,
) -> Result<u8> {
    Ok(f_symbol_index(
        group,
        group.encode(i)?,
        group.encode(j)?,
        group.encode(m)?,
        group.encode(k)?,
        group.encode(l)?,
        group.encode(n)?,
    ))
}

pub fn pentagon_check(group: &GroupSpec) -> Result<PentagonReport> {
    FSymbols::new(group).pentagon_check(DEFAULT_PENTAGON_MAX_ORDER)
}

pub fn branching_consistency(group: &GroupSpec) -> bool {
    FSymbols::new(group).branching_consistency()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(d: &[usize]) -> GroupElement {
        GroupElement { digits: d.to_vec() }
    }

    #[test]
    fn test_make_group() {
        let g = GroupSpec::new(&[2]).unwrap();
        assert_eq!((g.order(), g.exponent()), (2, 2));
        let g = GroupSpec::new(&[2, 3, 4]).unwrap();
        assert_eq!((g.order(), g.exponent()), (24, 12));
        let g = GroupSpec::new(&[]).unwrap();
        assert_eq!(g.order(), 1);
        let g = GroupSpec::new(&[1, 3, 1]).unwrap();
        assert_eq!(g.factors(), &[3]);
        assert!(matches!(GroupSpec::new(&[2, 0]), Err(Error::Validation(_))));
        assert!(GroupSpec::new(&[-3]).is_err());
    }

    #[test]
    fn test_parse_and_display() {
        let g: GroupSpec = "z2XZ3xZ4".parse().unwrap();
        assert_eq!(g.factors(), &[2, 3, 4]);
        assert_eq!(g.to_string(), "Z2xZ3xZ4");
        assert_eq!("Z1".parse::<GroupSpec>().unwrap().order(), 1);
        assert!("Q8".parse::<GroupSpec>().is_err());
        assert!("Z".parse::<GroupSpec>().is_err());
        assert!("".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn test_multiply_inverse() {
        let g = GroupSpec::new(&[2, 3]).unwrap();
        assert_eq!(g.multiply(&el(&[1, 2]), &el(&[1, 2])).unwrap(), el(&[0, 1]));
        assert_eq!(g.inverse(&el(&[1, 2])).unwrap(), el(&[1, 1]));
        for a in 0..g.order() {
            let x = g.element(a);
            let inv = g.inverse(&x).unwrap();
            assert_eq!(g.multiply(&x, &inv).unwrap(), g.identity());
        }
        assert!(g.multiply(&el(&[1]), &el(&[1, 0])).is_err());
        assert!(g.inverse(&el(&[2, 0])).is_err());
    }

    #[test]
    fn test_encoding_first_factor_most_significant() {
        let g = GroupSpec::new(&[2, 3]).unwrap();
        assert_eq!(g.encode(&el(&[1, 0])).unwrap(), 3);
        assert_eq!(g.digits(5), vec![1, 2]);
    }

    #[test]
    fn test_self_inverse() {
        assert_eq!(GroupSpec::cyclic(2).self_inverse_elements().len(), 2);
        assert_eq!(GroupSpec::cyclic(3).self_inverse_elements(), vec![el(&[0])]);
        assert_eq!(GroupSpec::new(&[2, 3, 4]).unwrap().self_inverse_count(), 4);
        assert_eq!(GroupSpec::cyclic(4).self_inverse_elements(), vec![el(&[0]), el(&[2])]);
    }

    #[test]
    fn test_fourier_z2_z3() {
        let h = GroupSpec::z2().fourier_matrix();
        let want = [1.0, 1.0, 1.0, -1.0];
        for (a, b) in h.entries.iter().zip(want) {
            assert!((a - Complex64::new(b, 0.0)).norm() < 1e-15);
        }
        let h = GroupSpec::cyclic(3).fourier_matrix();
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        for j in 0..3 {
            for k in 0..3 {
                assert!((h.get(j, k) - w.powu((j * k) as u32)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_fourier_tensor_product_structure() {
        let g = GroupSpec::new(&[2, 2]).unwrap();
        let h = g.fourier_matrix();
        let h2 = GroupSpec::z2().fourier_matrix();
        for j in 0..4 {
            for k in 0..4 {
                let want = h2.get(j / 2, k / 2) * h2.get(j % 2, k % 2);
                assert!((h.get(j, k) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn test_f_symbol_examples() {
        let z2 = GroupSpec::z2();
        let o = el(&[0]);
        let e = el(&[1]);
        assert_eq!(f_symbol(&z2, &e, &e, &o, &e, &e, &o).unwrap(), 1);
        assert_eq!(f_symbol(&z2, &e, &o, &o, &o, &o, &o).unwrap(), 0);
        let z3 = GroupSpec::cyclic(3);
        let o3 = el(&[0]);
        assert_eq!(f_symbol(&z3, &o3, &o3, &o3, &o3, &o3, &o3).unwrap(), 1);
    }

    #[test]
    fn test_pentagon_guard() {
        let g = GroupSpec::cyclic(7);
        assert!(matches!(pentagon_check(&g), Err(Error::Budget(_))));
    }
}
