//! Coupled a/c mesh: nodes on lattice sites, a single fully resolved
//! atomistic block `a..=b`, two interface atoms on each side of it, and a
//! finite element mesh elsewhere.
//!
//! Node indices are 0-based over the sorted labels in `(−N, N]`; the last
//! node is always `N`. Element `j` joins node `j−1` to node `j`, element 0
//! wrapping across the period seam. With `K1` the node at `a−1` and `K2` the
//! node at `b+1`:
//!
//! * elements `K1−1 ..= K2+2` have length `ε` (the interface layer),
//! * element `K1−2` and `K2+3` are the continuum elements touching it,
//! * all other elements are plain continuum elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "detail")]
pub enum Violation {
    T1(String),
    Order(String),
    T2(String),
    T3(String),
    T5(String),
    Fixed(String),
    Layout(String),
}

impl Violation {
    pub fn tag(&self) -> &'static str {
        match self {
            Violation::T1(_) => "T1",
            Violation::Order(_) => "order",
            Violation::T2(_) => "T2",
            Violation::T3(_) => "T3",
            Violation::T5(_) => "T5",
            Violation::Fixed(_) => "fixed",
            Violation::Layout(_) => "layout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACMesh {
    pub n: usize,
    pub eps: f64,
    pub nodes: Vec<i64>,
    /// First and last atomistic label.
    pub a: i64,
    pub b: i64,
    /// Elements that refinement must leave alone, as `(left, right)` labels.
    pub fixed: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl ACMesh {
    /// Validated constructor.
    pub fn new(
        n: usize,
        eps: f64,
        nodes: Vec<i64>,
        a: i64,
        b: i64,
        fixed: Vec<(i64, i64)>,
    ) -> Result<Self> {
        let m = Self {
            n,
            eps,
            nodes,
            a,
            b,
            fixed,
        };
        let v = m.validate();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(Error::Mesh(v))
        }
    }

    /// Builds a mesh from physical node coordinates; each must be an integer
    /// multiple of `ε`.
    pub fn from_coordinates(
        n: usize,
        eps: f64,
        xs: &[f64],
        a: i64,
        b: i64,
        fixed: Vec<(i64, i64)>,
    ) -> Result<Self> {
        let mut bad = Vec::new();
        let mut nodes = Vec::with_capacity(xs.len());
        for &x in xs {
            let l = (x / eps).round();
            if (x / eps - l).abs() > 1e-9 {
                bad.push(Violation::T1(format!("x = {x} is not a lattice site")));
            }
            nodes.push(l as i64);
        }
        if !bad.is_empty() {
            return Err(Error::Mesh(bad));
        }
        Self::new(n, eps, nodes, a, b, fixed)
    }

    /// Initial mesh with atomistic seed `{0}`, nodes `0, ±1..±4, ±L, ±(L+5), N`
    /// and fixed elements `[−(L+5), −L]`, `[L, L+5]`.
    pub fn build_initial(l: usize, n: usize, eps: f64) -> Result<Self> {
        if l < 8 {
            return Err(Error::Config(format!("L = {l} < 8")));
        }
        if n < l + 6 {
            return Err(Error::Config(format!(
                "N = {n} too small for L = {l} (need N ≥ L + 6)"
            )));
        }
        let li = l as i64;
        let mut nodes = vec![
            0,
            1,
            -1,
            2,
            -2,
            3,
            -3,
            4,
            -4,
            li,
            -li,
            li + 5,
            -(li + 5),
            n as i64,
        ];
        nodes.sort_unstable();
        nodes.dedup();
        Self::new(n, eps, nodes, 0, 0, vec![(-(li + 5), -li), (li, li + 5)])
    }

    pub fn k(&self) -> usize {
        self.nodes.len()
    }

    pub fn period(&self) -> i64 {
        2 * self.n as i64
    }

    pub fn node(&self, k: usize) -> i64 {
        self.nodes[k]
    }

    pub fn x(&self, k: usize) -> f64 {
        self.eps * self.nodes[k] as f64
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.nodes.binary_search(&label).ok()
    }

    /// Left and right labels of element `j`; the left label of element 0 is
    /// shifted down by one period.
    pub fn element(&self, j: usize) -> (i64, i64) {
        let r = self.nodes[j];
        let l = if j == 0 {
            self.nodes[self.k() - 1] - self.period()
        } else {
            self.nodes[j - 1]
        };
        (l, r)
    }

    /// Number of atoms `N_T = h_T/ε`.
    pub fn atoms(&self, j: usize) -> usize {
        let (l, r) = self.element(j);
        (r - l) as usize
    }

    pub fn h(&self, j: usize) -> f64 {
        self.eps * self.atoms(j) as f64
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.k()).map(|j| self.h(j)).collect()
    }

    /// `ℒ_T = {left+1, …, right}` (raw labels, possibly below `−N+1` for element 0).
    pub fn sites(&self, j: usize) -> std::ops::RangeInclusive<i64> {
        let (l, r) = self.element(j);
        l + 1..=r
    }

    /// Element containing bond `m`, i.e. with `m ∈ ℒ_T`.
    pub fn element_of_site(&self, m: i64) -> usize {
        let m = (m + self.n as i64 - 1).rem_euclid(self.period()) + 1 - self.n as i64;
        match self.nodes.binary_search(&m) {
            Ok(j) => j,
            Err(j) if j == self.k() => 0,
            Err(j) => j,
        }
    }

    pub fn k1(&self) -> usize {
        self.index_of(self.a - 1).expect("valid mesh has node a−1")
    }

    pub fn k2(&self) -> usize {
        self.index_of(self.b + 1).expect("valid mesh has node b+1")
    }

    pub fn n_atomistic(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    /// `𝒜 = {a, …, b}`.
    pub fn atomistic_sites(&self) -> std::ops::RangeInclusive<i64> {
        self.a..=self.b
    }

    pub fn interface_sites(&self) -> [i64; 4] {
        [self.a - 2, self.a - 1, self.b + 1, self.b + 2]
    }

    /// Elements in the length-`ε` interface layer (`K1−1 ..= K2+2`).
    pub fn is_layer_element(&self, j: usize) -> bool {
        j + 1 >= self.k1() && j <= self.k2() + 2
    }

    /// `𝒦^c_{𝒯h}`: every element outside the interface layer.
    pub fn continuum_elements(&self) -> Vec<usize> {
        (0..self.k())
            .filter(|&j| !self.is_layer_element(j))
            .collect()
    }

    /// Continuum elements other than the two touching the interface layer.
    pub fn interior_continuum_elements(&self) -> Vec<usize> {
        let (l, r) = (self.k1() - 2, self.k2() + 3);
        self.continuum_elements()
            .into_iter()
            .filter(|&j| j != l && j != r)
            .collect()
    }

    /// `𝒦^c`: nodes outside `K1−1 ..= K2+1`.
    pub fn continuum_nodes(&self) -> Vec<usize> {
        let (k1, k2) = (self.k1(), self.k2());
        (0..self.k())
            .filter(|&k| k + 1 < k1 || k > k2 + 1)
            .collect()
    }

    /// `𝒦̊^c`: continuum nodes other than `K1−2` and `K2+2`.
    pub fn interior_continuum_nodes(&self) -> Vec<usize> {
        let (l, r) = (self.k1() - 2, self.k2() + 2);
        self.continuum_nodes()
            .into_iter()
            .filter(|&k| k != l && k != r)
            .collect()
    }

    /// Element to the right of node `k` (element `k+1`, cyclic).
    pub fn next(&self, k: usize) -> usize {
        (k + 1) % self.k()
    }

    pub fn prev(&self, k: usize) -> usize {
        (k + self.k() - 1) % self.k()
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.fixed.contains(&self.element(j))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let n = self.n as i64;
        if self.nodes.len() < 3 {
            v.push(Violation::Layout("fewer than three nodes".into()));
            return v;
        }
        for w in self.nodes.windows(2) {
            if w[0] >= w[1] {
                v.push(Violation::Order(format!(
                    "nodes {} and {} not increasing",
                    w[0], w[1]
                )));
            }
        }
        if self.nodes[0] <= -n || self.nodes[self.k() - 1] != n {
            v.push(Violation::Layout(format!(
                "nodes must lie in (−N, N] and end at N = {n}"
            )));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            v.push(Violation::T1(format!(
                "lattice spacing {} invalid",
                self.eps
            )));
        }
        if !v.is_empty() {
            return v;
        }
        if self.a > self.b {
            v.push(Violation::T2(format!(
                "empty atomistic block a = {} > b = {}",
                self.a, self.b
            )));
            return v;
        }
        if self.a - 4 <= -n || self.b + 4 > n {
            v.push(Violation::Layout(
                "atomistic block too close to the period seam".into(),
            ));
            return v;
        }
        for l in self.a..=self.b {
            if self.index_of(l).is_none() {
                v.push(Violation::T2(format!("atomistic site {l} is not a node")));
            }
        }
        for l in self.interface_sites() {
            if self.index_of(l).is_none() {
                v.push(Violation::T3(format!("interface site {l} is not a node")));
            }
        }
        for l in [self.a - 3, self.b + 3] {
            if self.index_of(l).is_none() {
                v.push(Violation::T5(format!(
                    "site {l} next to the interface is not a node"
                )));
            }
        }
        if !v.is_empty() {
            return v;
        }
        let (k1, k2) = (self.k1(), self.k2());
        if k1 < 3 || k2 + 4 > self.k() {
            v.push(Violation::Layout(
                "no continuum element on one side of the interface".into(),
            ));
        }
        for &(l, r) in &self.fixed {
            match self.index_of(r) {
                Some(j) if self.element(j).0 == l => {
                    if j + 2 >= k1 && j <= k2 + 3 {
                        v.push(Violation::Fixed(format!(
                            "fixed element [{l}, {r}] touches the interface"
                        )));
                    }
                }
                _ => v.push(Violation::Fixed(format!(
                    "fixed element [{l}, {r}] is not an element"
                ))),
            }
        }
        v
    }

    fn with_nodes(&self, nodes: Vec<i64>, a: i64, b: i64) -> Result<Self> {
        Self::new(self.n, self.eps, nodes, a, b, self.fixed.clone())
    }

    /// Inserts `⌊(left + right)/2⌋` into element `j`.
    pub fn bisect(&self, j: usize) -> Result<Self> {
        if j >= self.k() {
            return Err(Error::MeshOp(format!("element {j} out of range")));
        }
        if self.is_fixed(j) {
            return Err(Error::MeshOp(format!("element {j} is fixed")));
        }
        let (l, r) = self.element(j);
        if r - l < 2 {
            return Err(Error::MeshOp(format!(
                "element {j} has length ε: must merge instead"
            )));
        }
        let mid = (l + r).div_euclid(2);
        let mut nodes = self.nodes.clone();
        let pos = nodes.binary_search(&mid).unwrap_err();
        nodes.insert(pos, mid);
        self.with_nodes(nodes, self.a, self.b)
    }

    /// Which side, if any, element `j` touches the interface layer on.
    pub fn interface_side(&self, j: usize) -> Option<Side> {
        if j + 2 == self.k1() {
            Some(Side::Left)
        } else if j == self.k2() + 3 {
            Some(Side::Right)
        } else {
            None
        }
    }

    /// Grows the atomistic block by one site towards element `j`, which must
    /// be `K1−2` or `K2+3`, inserting the node needed next to the new
    /// interface.
    pub fn merge_into_atomistic(&self, j: usize) -> Result<Self> {
        let side = self.interface_side(j).ok_or_else(|| {
            Error::MeshOp(format!("element {j} is not adjacent to the interface"))
        })?;
        let (a, b, extra) = match side {
            Side::Left => (self.a - 1, self.b, self.a - 4),
            Side::Right => (self.a, self.b + 1, self.b + 4),
        };
        let mut nodes = self.nodes.clone();
        if let Err(pos) = nodes.binary_search(&extra) {
            nodes.insert(pos, extra);
        }
        self.with_nodes(nodes, a, b)
            .map_err(|e| Error::MeshOp(format!("merge of element {j} rejected: {e}")))
    }

    /// Mesh regularity `κ` over the continuum nodes.
    pub fn kappa(&self) -> Kappa {
        let mut raw = f64::INFINITY;
        for k in self.continuum_nodes() {
            let (h0, h1) = (self.h(k), self.h(self.next(k)));
            let hw = 0.5 * (h0 + h1);
            raw = raw.min((hw / h0).min(hw / h1));
        }
        if !raw.is_finite() {
            raw = 1.0;
        }
        let value = raw.clamp(0.5 + 1e-12, 1.0);
        Kappa {
            value,
            raw,
            clamped: value != raw,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn initial(l: usize) -> ACMesh {
        let n = 2 * (l + 8);
        ACMesh::build_initial(l, n, 1.0 / n as f64).unwrap()
    }

    #[test]
    fn initial_mesh_layout() {
        let m = initial(32);
        assert!(m.validate().is_empty());
        assert_eq!(m.atomistic_sites(), 0..=0);
        assert_eq!(m.interface_sites(), [-2, -1, 1, 2]);
        let (k1, k2) = (m.k1(), m.k2());
        assert_eq!(m.element(k1 - 2), (-4, -3));
        assert_eq!(m.element(k2 + 3), (3, 4));
        for j in k1 - 1..=k2 + 2 {
            assert_eq!(m.atoms(j), 1);
        }
        assert!(m.is_fixed(1));
        assert_eq!(m.element(1), (-37, -32));
        assert_eq!(m.element(0), (-80, -37));
        assert!((m.lengths().iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn build_initial_rejects_small_l() {
        assert!(ACMesh::build_initial(7, 40, 0.025).is_err());
        assert!(ACMesh::build_initial(32, 36, 1.0 / 36.0).is_err());
    }

    #[test]
    fn validate_flags_properties() {
        let m = initial(32);
        let xs: Vec<f64> = m
            .nodes
            .iter()
            .map(|&l| l as f64 * m.eps + if l == 20 { 0.3 * m.eps } else { 0.0 })
            .collect();
        assert!(ACMesh::from_coordinates(m.n, m.eps, &xs, 0, 0, m.fixed.clone()).is_ok());
        let mut xs2 = xs.clone();
        xs2[11] += 0.5 * m.eps;
        match ACMesh::from_coordinates(m.n, m.eps, &xs2, 0, 0, m.fixed.clone()) {
            Err(Error::Mesh(v)) => assert_eq!(v[0].tag(), "T1"),
            other => panic!("{other:?}"),
        }
        let mut bad = m.clone();
        bad.nodes.retain(|&l| l != 3);
        assert_eq!(bad.validate()[0].tag(), "T5");
        let mut bad = m.clone();
        bad.nodes.retain(|&l| l != -2);
        assert_eq!(bad.validate()[0].tag(), "T3");
    }

    #[test]
    fn bisection_rounding() {
        let m = initial(32);
        let j = m.index_of(32).unwrap();
        assert_eq!(m.element(j), (4, 32));
        let m2 = m.bisect(j).unwrap();
        assert!(m2.index_of(18).is_some());
        let j = m2.index_of(18).unwrap();
        assert_eq!(m2.element(j), (4, 18));
        let m3 = m2.bisect(j).unwrap();
        assert!(m3.index_of(11).is_some());
        let (l, r) = (11, 18);
        let j = m3.index_of(18).unwrap();
        assert_eq!(m3.element(j), (l, r));
        assert!(m3.bisect(j).unwrap().index_of(14).is_some());
        let e = m.bisect(m.k1() - 2).unwrap_err();
        assert!(format!("{e}").contains("must merge instead"));
        assert!(m.bisect(1).is_err());
    }

    #[test]
    fn merge_grows_atomistic_block() {
        let m = initial(32);
        let left = m.merge_into_atomistic(m.k1() - 2).unwrap();
        assert_eq!((left.a, left.b), (-1, 0));
        assert_eq!(left.element(left.k1() - 2), (-32, -4));
        let both = left.merge_into_atomistic(left.k2() + 3).unwrap();
        assert_eq!((both.a, both.b), (-1, 1));
        let sym: Vec<i64> = both
            .nodes
            .iter()
            .filter(|&&l| l != both.n as i64)
            .map(|l| -l)
            .rev()
            .collect();
        let plain: Vec<i64> = both
            .nodes
            .iter()
            .copied()
            .filter(|&l| l != both.n as i64)
            .collect();
        assert_eq!(sym, plain);
        assert!(m.merge_into_atomistic(2).is_err());
    }

    #[test]
    fn kappa_values() {
        let m = initial(32);
        let k = m.kappa();
        assert!(k.value > 0.5 && k.value < 1.0);
        // ratio 2:1 gives 0.75, 4:1 gives 0.625
        let hw = |a: f64, b: f64| {
            let w = 0.5 * (a + b);
            (w / a).min(w / b)
        };
        assert_eq!(hw(2.0, 1.0), 0.75);
        assert_eq!(hw(4.0, 1.0), 0.625);
    }

    #[test]
    fn element_of_site_is_inverse_of_sites() {
        let m = initial(16);
        for j in 0..m.k() {
            for s in m.sites(j) {
                assert_eq!(m.element_of_site(s), j);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = initial(16);
        let back: ACMesh = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn refinement_closure(ops in proptest::collection::vec(0usize..1000, 1..40)) {
            let mut m = initial(16);
            for op in ops {
                let j = op % m.k();
                let next = if m.interface_side(j).is_some() && m.atoms(j) == 1 {
                    m.merge_into_atomistic(j)
                } else {
                    m.bisect(j)
                };
                if let Ok(n2) = next {
                    prop_assert!(n2.validate().is_empty());
                    prop_assert!(m.nodes.iter().all(|l| n2.index_of(*l).is_some()));
                    m = n2;
                }
            }
        }
    }
}
