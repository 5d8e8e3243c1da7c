//! Chain descriptions and the finite-volume one-particle operators built from them.
//!
//! Sites carry a coupling `J_x` (to site `x + 1`) and a field `v_x`. Finitely many
//! sites are listed in the window; every other site takes the value of the left or
//! right tail.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    #[serde(rename = "J")]
    pub j: f64,
    pub v: f64,
}

impl Site {
    pub const fn new(j: f64, v: f64) -> Self {
        Self { j, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub center_halfwidth: usize,
    #[serde(default)]
    pub window: BTreeMap<i64, Site>,
    pub left_tail: Site,
    pub right_tail: Site,
    pub beta_l: f64,
    pub beta_r: f64,
}

impl ChainSpec {
    /// Homogeneous chain with unit hopping, zero field and center `{0}`.
    pub fn free(beta_l: f64, beta_r: f64) -> Self {
        Self {
            center_halfwidth: 0,
            window: BTreeMap::new(),
            left_tail: Site::new(1.0, 0.0),
            right_tail: Site::new(1.0, 0.0),
            beta_l,
            beta_r,
        }
    }

    pub fn with_center(mut self, n: usize) -> Self {
        self.center_halfwidth = n;
        self
    }

    pub fn with_site(mut self, x: i64, j: f64, v: f64) -> Self {
        self.window.insert(x, Site::new(j, v));
        self
    }

    pub fn with_tails(mut self, left: Site, right: Site) -> Self {
        self.left_tail = left;
        self.right_tail = right;
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |s: &Site| s.j.is_finite() && s.v.is_finite();
        if !self.beta_l.is_finite() || !self.beta_r.is_finite() {
            return Err(Error::Validation("non-finite inverse temperature".into()));
        }
        if !finite(&self.left_tail) || !finite(&self.right_tail) {
            return Err(Error::Validation("non-finite tail parameter".into()));
        }
        if let Some((x, _)) = self.window.iter().find(|(_, s)| !finite(s)) {
            return Err(Error::Validation(format!("non-finite parameter at site {x}")));
        }
        if self.left_tail.j == 0.0 || self.right_tail.j == 0.0 {
            return Err(Error::Validation("zero tail coupling".into()));
        }
        if self.j_l() == 0.0 || self.j_r() == 0.0 {
            return Err(Error::Validation("zero boundary coupling".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> i64 {
        self.center_halfwidth as i64
    }

    /// Every site strictly left of this index carries the left tail values.
    pub fn left_edge(&self) -> i64 {
        self.window.keys().next().copied().unwrap_or(0)
    }

    /// Every site strictly right of this index carries the right tail values.
    pub fn right_edge(&self) -> i64 {
        self.window.keys().next_back().copied().unwrap_or(-1)
    }

    pub fn window_radius(&self) -> i64 {
        self.window.keys().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// Parameters of site `x`. Unlisted sites inside the window span use the tail
    /// on their side of the origin.
    pub fn site(&self, x: i64) -> Site {
        if let Some(s) = self.window.get(&x) {
            return *s;
        }
        if x < self.left_edge() {
            self.left_tail
        } else if x > self.right_edge() || x >= 0 {
            self.right_tail
        } else {
            self.left_tail
        }
    }

    pub fn j(&self, x: i64) -> f64 {
        self.site(x).j
    }

    pub fn v(&self, x: i64) -> f64 {
        self.site(x).v
    }

    /// `J_{-N-1}`, the bond joining the left reservoir to the center.
    pub fn j_l(&self) -> f64 {
        self.j(-self.n() - 1)
    }

    /// `J_N`, the bond joining the center to the right reservoir.
    pub fn j_r(&self) -> f64 {
        self.j(self.n())
    }

    pub fn tail(&self, side: Side) -> Site {
        match side {
            Side::Left => self.left_tail,
            Side::Right => self.right_tail,
        }
    }

    /// Largest `|J|` and the field range over window and tails.
    pub fn bounds(&self) -> (f64, f64, f64) {
        let sites = self.window.values().chain([&self.left_tail, &self.right_tail]);
        let mut jmax = 0.0f64;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for s in sites {
            jmax = jmax.max(s.j.abs());
            vmin = vmin.min(s.v);
            vmax = vmax.max(s.v);
        }
        (jmax, vmin, vmax)
    }
}

pub fn parse_chain_spec(path: impl AsRef<Path>) -> Result<ChainSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    ChainSpec::from_json_str(&text)
}

/// Dense one-particle operators on `[-M, M]` with a Dirichlet cut.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    pub spec: ChainSpec,
    pub m: usize,
    pub h: Mat<f64>,
    pub h0: Mat<f64>,
    pub vcoupling: Mat<f64>,
    pub k: Mat<f64>,
}

pub fn build_finite_chain(spec: &ChainSpec, m: usize) -> Result<FiniteChain> {
    let n = spec.n();
    let mi = m as i64;
    if mi < n + 1 {
        return Err(Error::Dimension(format!("M = {m} leaves a reservoir empty (need M >= N + 1 = {})", n + 1)));
    }
    if mi < spec.window_radius() {
        return Err(Error::Dimension(format!("M = {m} does not reach the window radius {}", spec.window_radius())));
    }
    let dim = 2 * m + 1;
    let idx = |x: i64| (x + mi) as usize;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for x in -mi..=mi {
        h.write(idx(x), idx(x), spec.v(x));
        if x < mi {
            let j = spec.j(x);
            h.write(idx(x), idx(x + 1), j);
            h.write(idx(x + 1), idx(x), j);
        }
    }
    let mut vcoupling = Mat::<f64>::zeros(dim, dim);
    for (a, b) in [(-n - 1, -n), (n, n + 1)] {
        let j = spec.j(a.min(b));
        vcoupling.write(idx(a), idx(b), j);
        vcoupling.write(idx(b), idx(a), j);
    }
    let h0 = Mat::from_fn(dim, dim, |i, j| h.read(i, j) - vcoupling.read(i, j));
    let mut chain = FiniteChain { spec: spec.clone(), m, h, h0, vcoupling, k: Mat::zeros(dim, dim) };
    let left = chain.block(Side::Left);
    let right = chain.block(Side::Right);
    let (bl, br) = (spec.beta_l, spec.beta_r);
    chain.k = Mat::from_fn(dim, dim, |i, j| {
        if left.contains(&i) && left.contains(&j) {
            -bl * chain.h0.read(i, j)
        } else if right.contains(&i) && right.contains(&j) {
            -br * chain.h0.read(i, j)
        } else {
            0.0
        }
    });
    Ok(chain)
}

impl FiniteChain {
    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    /// Storage index of global site `x`; the only place the `+M` offset appears.
    pub fn index(&self, x: i64) -> usize {
        let i = x + self.m as i64;
        debug_assert!(i >= 0 && (i as usize) < self.dim(), "site {x} outside [-M, M]");
        i as usize
    }

    pub fn site_of(&self, i: usize) -> i64 {
        i as i64 - self.m as i64
    }

    /// Storage range of the left `[-M, -N-1]` or right `[N+1, M]` reservoir.
    pub fn block(&self, side: Side) -> Range<usize> {
        let n = self.spec.n();
        match side {
            Side::Left => self.index(-(self.m as i64))..self.index(-n - 1) + 1,
            Side::Right => self.index(n + 1)..self.dim(),
        }
    }

    pub fn center(&self) -> Range<usize> {
        let n = self.spec.n();
        self.index(-n)..self.index(n) + 1
    }

    /// `h_l` or `h_r` embedded in the full space.
    pub fn reservoir_h(&self, side: Side) -> Mat<f64> {
        let r = self.block(side);
        Mat::from_fn(
            self.dim(),
            self.dim(),
            |i, j| {
                if r.contains(&i) && r.contains(&j) {
                    self.h0.read(i, j)
                } else {
                    0.0
                }
            },
        )
    }

    /// The boundary bond `v_l` or `v_r` as `(reservoir site, center site, J)` storage indices.
    pub fn bond(&self, side: Side) -> (usize, usize, f64) {
        let n = self.spec.n();
        match side {
            Side::Left => (self.index(-n - 1), self.index(-n), self.spec.j(-n - 1)),
            Side::Right => (self.index(n + 1), self.index(n), self.spec.j(n)),
        }
    }

    /// Real antisymmetric `C` with `phi = i C = i [h_side, v_side]`.
    pub fn flux_generator(&self, side: Side) -> Mat<f64> {
        let (a, b, j) = self.bond(side);
        let r = self.block(side);
        let dim = self.dim();
        let mut c = Mat::<f64>::zeros(dim, dim);
        for x in r {
            let hxa = self.h0.read(x, a);
            if hxa != 0.0 {
                c.write(x, b, c.read(x, b) + j * hxa);
                c.write(b, x, c.read(b, x) - j * hxa);
            }
        }
        c
    }

    pub fn betas(&self) -> (f64, f64) {
        (self.spec.beta_l, self.spec.beta_r)
    }
}
