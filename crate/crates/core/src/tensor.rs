//! Dense tensors, the symbolic node vocabulary and the running network scalar.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, Result};
use crate::group::GroupSpec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A row-major complex array. A tensor with no indices is a scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct DenseTensorJson {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for DenseTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DenseTensorJson {
            dims: self.dims.clone(),
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseTensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DenseTensorJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let data = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        DenseTensor::new(raw.dims, data).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Advances a mixed-radix counter; returns false after the last index.
pub(crate) fn next_index(idx: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < dims[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if dims.contains(&0) {
            return validation("tensor dimensions must be at least 1");
        }
        let size: usize = dims.iter().product();
        if size != data.len() {
            return validation(format!("data length {} does not match dims {:?}", data.len(), dims));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let size = dims.iter().product();
        DenseTensor {
            dims,
            data: vec![ZERO; size],
        }
    }

    pub fn scalar(value: Complex64) -> Self {
        DenseTensor {
            dims: vec![],
            data: vec![value],
        }
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let size: usize = dims.iter().product();
        let mut data = Vec::with_capacity(size);
        let mut idx = vec![0; dims.len()];
        for _ in 0..size {
            data.push(f(&idx));
            next_index(&mut idx, &dims);
        }
        DenseTensor { dims, data }
    }

    pub fn identity(d: usize) -> Self {
        DenseTensor::from_fn(vec![d, d], |i| if i[0] == i[1] { ONE } else { ZERO })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// The value of a rank-0 tensor.
    pub fn scalar_value(&self) -> Option<Complex64> {
        (self.dims.is_empty()).then(|| self.data[0])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return validation(format!("shape mismatch {:?} vs {:?}", self.dims, other.dims));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Reorders indices so that new index `k` is old index `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return validation(format!("{perm:?} is not a permutation of {r} indices"));
        }
        let old_strides = strides(&self.dims);
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let new_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; r];
        for _ in 0..self.data.len() {
            let o: usize = idx.iter().zip(&new_strides).map(|(i, s)| i * s).sum();
            data.push(self.data[o]);
            next_index(&mut idx, &new_dims);
        }
        Ok(DenseTensor { dims: new_dims, data })
    }

    pub fn outer(&self, other: &DenseTensor) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        DenseTensor { dims, data }
    }

    /// Sums over pairs of indices of this tensor; remaining indices keep their order.
    pub fn trace_pairs(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        let r = self.rank();
        let mut used = vec![false; r];
        for &(a, b) in pairs {
            if a >= r || b >= r || a == b || used[a] || used[b] {
                return validation(format!("invalid trace pair ({a}, {b})"));
            }
            if self.dims[a] != self.dims[b] {
                return validation(format!("traced dimensions differ at ({a}, {b})"));
            }
            used[a] = true;
            used[b] = true;
        }
        let free: Vec<usize> = (0..r).filter(|&i| !used[i]).collect();
        let free_dims: Vec<usize> = free.iter().map(|&i| self.dims[i]).collect();
        let pair_dims: Vec<usize> = pairs.iter().map(|&(a, _)| self.dims[a]).collect();
        let st = strides(&self.dims);
        let mut out = DenseTensor::zeros(free_dims.clone());
        let mut fidx = vec![0; free.len()];
        for slot in out.data.iter_mut() {
            let base: usize = free.iter().zip(&fidx).map(|(&i, &v)| st[i] * v).sum();
            let mut pidx = vec![0; pairs.len()];
            let mut acc = ZERO;
            loop {
                let o: usize = base
                    + pairs
                        .iter()
                        .zip(&pidx)
                        .map(|(&(a, b), &v)| (st[a] + st[b]) * v)
                        .sum::<usize>();
                acc += self.data[o];
                if !next_index(&mut pidx, &pair_dims) {
                    break;
                }
            }
            *slot = acc;
            next_index(&mut fidx, &free_dims);
        }
        Ok(out)
    }

    /// Reshapes to a matrix with the first `row_rank` indices as rows.
    pub fn to_matrix(&self, row_rank: usize) -> nalgebra::DMatrix<Complex64> {
        let rows: usize = self.dims[..row_rank].iter().product();
        let cols: usize = self.dims[row_rank..].iter().product();
        nalgebra::DMatrix::from_row_slice(rows, cols, &self.data)
    }
}

/// Contracts `a` with `b` over the listed index pairs.
///
/// The result carries the free indices of `a` followed by those of `b`, each in original order.
pub fn contract_pair(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(i, j) in pairs {
        if i >= ra || j >= rb {
            return validation(format!("contraction pair ({i}, {j}) out of range"));
        }
        if std::mem::replace(&mut used_a[i], true) || std::mem::replace(&mut used_b[j], true) {
            return validation(format!("index repeated in contraction pair ({i}, {j})"));
        }
        if a.dims[i] != b.dims[j] {
            return validation(format!(
                "dimension mismatch {} vs {} at pair ({i}, {j})",
                a.dims[i], b.dims[j]
            ));
        }
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&j| !used_b[j]).collect();
    let mut perm_a = free_a.clone();
    perm_a.extend(pairs.iter().map(|p| p.0));
    let mut perm_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    perm_b.extend(&free_b);
    let at = a.permute(&perm_a)?;
    let bt = b.permute(&perm_b)?;
    let m: usize = free_a.iter().map(|&i| a.dims[i]).product();
    let k: usize = pairs.iter().map(|p| a.dims[p.0]).product();
    let n: usize = free_b.iter().map(|&j| b.dims[j]).product();
    let mut data = vec![ZERO; m * n];
    for row in 0..m {
        let arow = &at.data[row * k..(row + 1) * k];
        let out = &mut data[row * n..(row + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == ZERO {
                continue;
            }
            let brow = &bt.data[kk * n..(kk + 1) * n];
            for (o, &bv) in out.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    let mut dims: Vec<usize> = free_a.iter().map(|&i| a.dims[i]).collect();
    dims.extend(free_b.iter().map(|&j| b.dims[j]));
    Ok(DenseTensor { dims, data })
}

/// Outcome of a proportionality test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleFit {
    pub equal: bool,
    pub scale: Complex64,
}

/// Tests whether `a = c b` for some nonzero `c`, fitting `c` on the largest entry of `b`.
pub fn equal_up_to_scale(a: &DenseTensor, b: &DenseTensor, tol: f64) -> Result<ScaleFit> {
    if a.dims != b.dims {
        return validation(format!("shape mismatch {:?} vs {:?}", a.dims, b.dims));
    }
    let (pos, bmax) = b
        .data
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let amax = a.max_abs();
    if bmax == 0.0 {
        return Ok(ScaleFit {
            equal: amax == 0.0,
            scale: ZERO,
        });
    }
    let c = a.data[pos] / b.data[pos];
    if c == ZERO {
        return Ok(ScaleFit { equal: false, scale: c });
    }
    let dev = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - c * y).norm())
        .fold(0.0, f64::max);
    Ok(ScaleFit {
        equal: dev <= tol * amax,
        scale: c,
    })
}

/// Checks that a cubic tensor is 0/1 valued and that any two indices fix the third.
pub fn bialgebra_condition_check(b: &DenseTensor) -> bool {
    if b.rank() != 3 || b.dims[0] != b.dims[1] || b.dims[1] != b.dims[2] {
        return false;
    }
    let d = b.dims[0];
    if b.data.iter().any(|z| *z != ZERO && *z != ONE) {
        return false;
    }
    for free in 0..3 {
        for x in 0..d {
            for y in 0..d {
                let mut hits = 0;
                for z in 0..d {
                    let idx = match free {
                        0 => [z, x, y],
                        1 => [x, z, y],
                        _ => [x, y, z],
                    };
                    if b.get(&idx) == ONE {
                        hits += 1;
                    }
                }
                if hits > 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// A network-wide complex prefactor kept as mantissa times a power of two,
/// so that norms of large lattices do not overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarAccumulator {
    mantissa: Complex64,
    exp2: i64,
}

impl Default for ScalarAccumulator {
    fn default() -> Self {
        ScalarAccumulator::one()
    }
}

impl ScalarAccumulator {
    pub fn one() -> Self {
        ScalarAccumulator { mantissa: ONE, exp2: 0 }
    }

    pub fn from_complex(value: Complex64) -> Self {
        let mut s = ScalarAccumulator {
            mantissa: value,
            exp2: 0,
        };
        s.normalize();
        s
    }

    pub fn from_parts(mantissa: Complex64, exp2: i64) -> Self {
        let mut s = ScalarAccumulator { mantissa, exp2 };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let n = self.mantissa.norm();
        if n == 0.0 || !n.is_finite() {
            self.exp2 = 0;
            return;
        }
        let e = n.log2().floor() as i64;
        if e != 0 {
            self.mantissa *= 2f64.powi(-(e as i32));
            self.exp2 += e;
        }
    }

    pub fn mul(&mut self, factor: Complex64) {
        self.mantissa *= factor;
        self.normalize();
    }

    pub fn mul_acc(&mut self, other: &ScalarAccumulator) {
        self.mantissa *= other.mantissa;
        self.exp2 += other.exp2;
        self.normalize();
    }

    pub fn conj(&self) -> Self {
        ScalarAccumulator {
            mantissa: self.mantissa.conj(),
            exp2: self.exp2,
        }
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == ZERO
    }

    /// The plain complex value; overflows to infinity beyond the f64 range.
    pub fn value(&self) -> Complex64 {
        let e = self.exp2.clamp(-2000, 2000) as i32;
        if e > 1000 {
            return self.mantissa * 2f64.powi(1000) * 2f64.powi(e - 1000);
        }
        if e < -1000 {
            return self.mantissa * 2f64.powi(-1000) * 2f64.powi(e + 1000);
        }
        self.mantissa * 2f64.powi(e)
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }
}

/// The symbolic tensor vocabulary. Arity is the number of ports on the owning node.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// 1 iff all indices are equal.
    Copy,
    /// 1 iff the indices sum to the identity.
    GroupPlus,
    /// Character table `H`, arity 2.
    Fourier,
    /// Conjugate character table `H*`, arity 2.
    FourierConj,
    /// 1 iff all indices are equal to the same self-inverse element.
    SubCopy,
    /// Z2 only: `cos(theta)^(1/2)` on even parity, `sin(theta)^(1/2)` on odd parity.
    Impurity {
        theta: f64,
    },
    /// Standard basis vector for the element with this index.
    BasisKet(usize),
    /// All-ones vector.
    UniformKet,
    Dense(DenseTensor),
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Copy => "Copy",
            NodeKind::GroupPlus => "GroupPlus",
            NodeKind::Fourier => "Fourier",
            NodeKind::FourierConj => "FourierConj",
            NodeKind::SubCopy => "SubCopy",
            NodeKind::Impurity { .. } => "Impurity",
            NodeKind::BasisKet(_) => "BasisKet",
            NodeKind::UniformKet => "UniformKet",
            NodeKind::Dense(_) => "Dense",
        }
    }

    /// Whether the tensor is unchanged by any permutation of its indices.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, NodeKind::Dense(_))
    }

    /// Whether every entry is real.
    pub fn is_real(&self) -> bool {
        match self {
            NodeKind::Fourier | NodeKind::FourierConj => false,
            NodeKind::Dense(t) => t.data().iter().all(|z| z.im == 0.0),
            _ => true,
        }
    }

    /// The entrywise complex conjugate, as used by the bra layer.
    pub fn conj(&self) -> NodeKind {
        match self {
            NodeKind::Fourier => NodeKind::FourierConj,
            NodeKind::FourierConj => NodeKind::Fourier,
            NodeKind::Dense(t) => NodeKind::Dense(t.conj()),
            other => other.clone(),
        }
    }

    /// Checks the kind against the group and an arity.
    pub fn validate(&self, group: &GroupSpec, arity: usize) -> Result<()> {
        let d = group.order();
        match self {
            NodeKind::Fourier | NodeKind::FourierConj if arity != 2 => {
                validation(format!("{} requires arity 2, got {arity}", self.name()))
            }
            NodeKind::BasisKet(g) if arity != 1 || *g >= d => {
                validation(format!("BasisKet({g}) requires arity 1 and an element below {d}"))
            }
            NodeKind::UniformKet if arity != 1 => validation("UniformKet requires arity 1"),
            NodeKind::Impurity { theta } => {
                if d != 2 {
                    return validation(format!("Impurity requires |G| = 2, got {group}"));
                }
                if !(0.0..=std::f64::consts::FRAC_PI_2).contains(theta) {
                    return validation(format!("Impurity theta {theta} outside [0, pi/2]"));
                }
                Ok(())
            }
            NodeKind::Dense(t) if t.dims() != vec![d; arity].as_slice() => validation(format!(
                "Dense tensor dims {:?} do not match arity {arity} over |G| = {d}",
                t.dims()
            )),
            _ => Ok(()),
        }
    }

    /// Value of one entry without building the whole tensor.
    pub fn entry(&self, group: &GroupSpec, idx: &[usize]) -> Complex64 {
        let bit = |b: bool| if b { ONE } else { ZERO };
        match self {
            NodeKind::Copy => match idx.first() {
                None => Complex64::new(group.order() as f64, 0.0),
                Some(&x) => bit(idx.iter().all(|&y| y == x)),
            },
            NodeKind::SubCopy => match idx.first() {
                None => Complex64::new(group.self_inverse_count() as f64, 0.0),
                Some(&x) => bit(group.is_self_inverse(x) && idx.iter().all(|&y| y == x)),
            },
            NodeKind::GroupPlus => bit(idx.iter().fold(0, |acc, &x| group.add(acc, x)) == 0),
            NodeKind::Fourier => group.character(idx[0], idx[1]),
            NodeKind::FourierConj => group.character(idx[0], idx[1]).conj(),
            NodeKind::Impurity { theta } => {
                let odd = idx.iter().sum::<usize>() % 2 == 1;
                let v = if odd { theta.sin() } else { theta.cos() };
                Complex64::new(v.max(0.0).sqrt(), 0.0)
            }
            NodeKind::BasisKet(g) => bit(idx[0] == *g),
            NodeKind::UniformKet => ONE,
            NodeKind::Dense(t) => t.get(idx),
        }
    }

    /// Builds the explicit tensor of shape `[|G|; arity]`.
    pub fn materialize(&self, group: &GroupSpec, arity: usize) -> Result<DenseTensor> {
        self.validate(group, arity)?;
        if let NodeKind::Dense(t) = self {
            return Ok(t.clone());
        }
        Ok(DenseTensor::from_fn(vec![group.order(); arity], |idx| {
            self.entry(group, idx)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn test_materialize_copy_plus() {
        let z2 = GroupSpec::z2();
        let t = NodeKind::Copy.materialize(&z2, 3).unwrap();
        let ones: Vec<Vec<usize>> = ones_of(&t);
        assert_eq!(ones, vec![vec![0, 0, 0], vec![1, 1, 1]]);
        let t = NodeKind::GroupPlus.materialize(&z2, 3).unwrap();
        assert_eq!(
            ones_of(&t),
            vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
        );
        let t = NodeKind::GroupPlus.materialize(&GroupSpec::cyclic(3), 3).unwrap();
        assert_eq!(ones_of(&t).len(), 9);
        let t = NodeKind::SubCopy.materialize(&GroupSpec::cyclic(4), 3).unwrap();
        assert_eq!(ones_of(&t), vec![vec![0, 0, 0], vec![2, 2, 2]]);
    }

    fn ones_of(t: &DenseTensor) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx = vec![0; t.rank()];
        loop {
            if t.get(&idx) == ONE {
                out.push(idx.clone());
            }
            if !next_index(&mut idx, t.dims()) {
                break;
            }
        }
        out
    }

    #[test]
    fn test_materialize_impurity() {
        let z2 = GroupSpec::z2();
        let t = NodeKind::Impurity { theta: PI / 4.0 }.materialize(&z2, 3).unwrap();
        for z in t.data() {
            assert!((z - c(2f64.powf(-0.25))).norm() < 1e-15);
        }
        assert!(NodeKind::Impurity { theta: 0.1 }
            .materialize(&GroupSpec::cyclic(3), 3)
            .is_err());
        assert!(NodeKind::Impurity { theta: 2.0 }.materialize(&z2, 3).is_err());
        let t0 = NodeKind::Impurity { theta: 0.0 }.materialize(&z2, 3).unwrap();
        assert_eq!(t0, NodeKind::GroupPlus.materialize(&z2, 3).unwrap());
    }

    #[test]
    fn test_degenerate_arities() {
        let z4 = GroupSpec::cyclic(4);
        assert_eq!(NodeKind::Copy.materialize(&z4, 0).unwrap().scalar_value(), Some(c(4.0)));
        assert_eq!(
            NodeKind::SubCopy.materialize(&z4, 0).unwrap().scalar_value(),
            Some(c(2.0))
        );
        assert_eq!(
            NodeKind::GroupPlus.materialize(&z4, 0).unwrap().scalar_value(),
            Some(c(1.0))
        );
    }

    #[test]
    fn test_contract_pair_examples() {
        let z2 = GroupSpec::z2();
        let copy = NodeKind::Copy.materialize(&z2, 3).unwrap();
        let ket0 = NodeKind::BasisKet(0).materialize(&z2, 1).unwrap();
        let r = contract_pair(&copy, &ket0, &[(2, 0)]).unwrap();
        assert_eq!(r.data(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);

        let plus = NodeKind::GroupPlus.materialize(&z2, 3).unwrap();
        let uni = NodeKind::UniformKet.materialize(&z2, 1).unwrap();
        let r = contract_pair(&plus, &uni, &[(2, 0)]).unwrap();
        assert_eq!(r.data(), &[c(1.0); 4]);

        let h = NodeKind::Fourier.materialize(&z2, 2).unwrap();
        let hc = NodeKind::FourierConj.materialize(&z2, 2).unwrap();
        let r = contract_pair(&h, &hc, &[(1, 0)]).unwrap();
        assert!(r.max_abs_diff(&DenseTensor::identity(2).scale(c(2.0))).unwrap() < 1e-15);
    }

    #[test]
    fn test_contract_pair_errors() {
        let a = DenseTensor::zeros(vec![2, 3]);
        let b = DenseTensor::zeros(vec![2, 2]);
        assert!(contract_pair(&a, &b, &[(1, 0)]).is_err());
        assert!(contract_pair(&a, &b, &[(0, 0), (0, 1)]).is_err());
        assert!(contract_pair(&a, &b, &[(5, 0)]).is_err());
    }

    #[test]
    fn test_equal_up_to_scale() {
        let z2 = GroupSpec::z2();
        let a = NodeKind::GroupPlus.materialize(&z2, 3).unwrap();
        let fit = equal_up_to_scale(&a.scale(c(3.0)), &a, 1e-12).unwrap();
        assert!(fit.equal);
        assert!((fit.scale - c(3.0)).norm() < 1e-15);
        let mut e = a.clone();
        e.data_mut()[1] += ONE;
        assert!(!equal_up_to_scale(&e, &a, 1e-10).unwrap().equal);
        let zero = DenseTensor::zeros(vec![2, 2, 2]);
        assert!(!equal_up_to_scale(&a, &zero, 1e-10).unwrap().equal);
    }

    #[test]
    fn test_plus_is_fourier_sandwiched_copy() {
        for g in ["Z2", "Z3", "Z4", "Z5", "Z6", "Z2xZ2", "Z2xZ3"] {
            let group: GroupSpec = g.parse().unwrap();
            let mut t = NodeKind::Copy.materialize(&group, 3).unwrap();
            let h = NodeKind::Fourier.materialize(&group, 2).unwrap();
            for _ in 0..3 {
                // contracting index 0 each time rotates the legs back into order
                t = contract_pair(&t, &h, &[(0, 0)]).unwrap();
            }
            let plus = NodeKind::GroupPlus.materialize(&group, 3).unwrap();
            let fit = equal_up_to_scale(&t, &plus, 1e-10).unwrap();
            assert!(fit.equal, "{g}");
            assert!((fit.scale - c(group.order() as f64)).norm() < 1e-9);
        }
    }

    #[test]
    fn test_bialgebra_condition() {
        for g in ["Z2", "Z3", "Z4", "Z2xZ2"] {
            let group: GroupSpec = g.parse().unwrap();
            let t = NodeKind::GroupPlus.materialize(&group, 3).unwrap();
            assert!(bialgebra_condition_check(&t));
        }
        let mut bad = DenseTensor::zeros(vec![2, 2, 2]);
        bad.set(&[0, 0, 0], ONE);
        bad.set(&[0, 0, 1], ONE);
        assert!(!bialgebra_condition_check(&bad));
    }

    #[test]
    fn test_scalar_accumulator_extended_range() {
        let mut s = ScalarAccumulator::one();
        for _ in 0..1100 {
            s.mul(c(2.0));
        }
        assert_eq!(s.exp2(), 1100);
        assert!((s.ln_abs() - 1100.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(s.value().re.is_infinite());
        let mut t = ScalarAccumulator::from_complex(c(32.0));
        t.mul(Complex64::new(0.0, 0.5));
        assert!((t.value() - Complex64::new(0.0, 16.0)).norm() < 1e-12);
    }

    #[test]
    fn test_dense_json_round_trip() {
        let t = DenseTensor::from_fn(vec![2, 3], |i| Complex64::new(i[0] as f64, i[1] as f64));
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"dims\":[2,3]"));
        let back: DenseTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<DenseTensor>(r#"{"dims":[2],"re":[1],"im":[0]}"#).is_err());
    }

    #[test]
    fn test_permute_and_trace() {
        let t = DenseTensor::from_fn(vec![2, 3, 2], |i| c((i[0] * 100 + i[1] * 10 + i[2]) as f64));
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[2, 2, 3]);
        assert_eq!(p.get(&[1, 0, 2]), t.get(&[0, 2, 1]));
        let tr = t.trace_pairs(&[(0, 2)]).unwrap();
        assert_eq!(tr.get(&[1]), t.get(&[0, 1, 0]) + t.get(&[1, 1, 1]));
    }
}
