//! Affine matrix expressions over a flat vector of scalar decision
//! variables, used to assemble matrix inequalities into [`SdpBlock`]s.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::sdp::{BlockTerm, SdpBlock, SdpProblem};

/// Hands out scalar indices for matrix and scalar unknowns.
#[derive(Debug, Clone, Default)]
pub struct VarLayout {
    n: usize,
}

impl VarLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scalar(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn sym(&mut self, dim: usize) -> SymVar {
        let offset = self.n;
        self.n += dim * (dim + 1) / 2;
        SymVar { offset, dim }
    }

    /// Rows with `active[i] == false` are identically zero and get no
    /// variables.
    pub fn mat(&mut self, rows: usize, cols: usize, active: &[bool]) -> MatVar {
        assert_eq!(active.len(), rows);
        let mut row_offset = Vec::with_capacity(rows);
        for &on in active {
            if on {
                row_offset.push(Some(self.n));
                self.n += cols;
            } else {
                row_offset.push(None);
            }
        }
        MatVar {
            rows,
            cols,
            row_offset,
        }
    }

    pub fn problem(&self) -> SdpProblem {
        SdpProblem::new(self.n)
    }
}

/// Symmetric matrix unknown stored by its upper triangle, row by row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymVar {
    pub offset: usize,
    pub dim: usize,
}

impl SymVar {
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i hold dim + (dim-1) + ... + (dim-i+1) entries
        self.offset + i * self.dim - i * (i.saturating_sub(1)) / 2 - i + j
    }

    pub fn value(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| z[self.index(i, j)])
    }

    /// Writes `m`'s upper triangle into `z`.
    pub fn store(&self, m: &DMatrix<f64>, z: &mut [f64]) {
        for i in 0..self.dim {
            for j in i..self.dim {
                z[self.index(i, j)] = m[(i, j)];
            }
        }
    }
}

/// Rectangular unknown with optionally pinned-to-zero rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatVar {
    pub rows: usize,
    pub cols: usize,
    pub row_offset: Vec<Option<usize>>,
}

impl MatVar {
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.row_offset[i].map(|o| o + j)
    }

    pub fn value(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.index(i, j).map_or(0.0, |k| z[k])
        })
    }

    pub fn store(&self, m: &DMatrix<f64>, z: &mut [f64]) {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if let Some(k) = self.index(i, j) {
                    z[k] = m[(i, j)];
                }
            }
        }
    }
}

/// `constant + Σ_k z_k T_k` with sparse `T_k` kept as `(row, col, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: DMatrix<f64>,
    pub terms: BTreeMap<usize, Vec<(usize, usize, f64)>>,
}

fn normalize(mut entries: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2 != 0.0);
    out
}

/// Nonzeros of each column of a dense matrix.
fn column_nonzeros(m: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..m.ncols())
        .map(|j| {
            m.column(j)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect()
        })
        .collect()
}

impl Affine {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize, scale: f64) -> Self {
        Self::constant(DMatrix::from_diagonal_element(n, n, scale))
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn from_terms(
        constant: DMatrix<f64>,
        terms: impl IntoIterator<Item = (usize, Vec<(usize, usize, f64)>)>,
    ) -> Self {
        let mut map: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
        for (k, e) in terms {
            map.entry(k).or_default().extend(e);
        }
        let terms = map
            .into_iter()
            .map(|(k, e)| (k, normalize(e)))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        Self { constant, terms }
    }

    pub fn sym_var(v: &SymVar) -> Self {
        let n = v.dim;
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                let e = if i == j {
                    vec![(i, i, 1.0)]
                } else {
                    vec![(i, j, 1.0), (j, i, 1.0)]
                };
                terms.push((v.index(i, j), e));
            }
        }
        Self::from_terms(DMatrix::zeros(n, n), terms)
    }

    pub fn mat_var(v: &MatVar) -> Self {
        let mut terms = Vec::new();
        for i in 0..v.rows {
            for j in 0..v.cols {
                if let Some(k) = v.index(i, j) {
                    terms.push((k, vec![(i, j, 1.0)]));
                }
            }
        }
        Self::from_terms(DMatrix::zeros(v.rows, v.cols), terms)
    }

    /// `z_k · m`.
    pub fn scalar_times(k: usize, m: &DMatrix<f64>) -> Self {
        let mut e = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    e.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_terms(DMatrix::zeros(m.nrows(), m.ncols()), [(k, e)])
    }

    /// `z_k · scale · I_n`.
    pub fn scalar_identity(k: usize, n: usize, scale: f64) -> Self {
        Self::from_terms(DMatrix::zeros(n, n), [(k, (0..n).map(|i| (i, i, scale)).collect())])
    }

    pub fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (&k, e) in &self.terms {
            let w = z[k];
            if w != 0.0 {
                for &(r, c, v) in e {
                    m[(r, c)] += w * v;
                }
            }
        }
        m
    }

    pub fn scale(mut self, f: f64) -> Self {
        self.constant *= f;
        for e in self.terms.values_mut() {
            for x in e.iter_mut() {
                x.2 *= f;
            }
        }
        if f == 0.0 {
            self.terms.clear();
        }
        self
    }

    pub fn add(&self, other: &Affine) -> Self {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "affine add shape"
        );
        let mut terms = self.terms.clone();
        for (&k, e) in &other.terms {
            terms.entry(k).or_default().extend(e.iter().copied());
        }
        Self::from_terms(&self.constant + &other.constant, terms)
    }

    pub fn sub(&self, other: &Affine) -> Self {
        self.add(&other.clone().scale(-1.0))
    }

    pub fn add_constant(mut self, m: &DMatrix<f64>) -> Self {
        self.constant += m;
        self
    }

    pub fn transpose(&self) -> Self {
        Self::from_terms(
            self.constant.transpose(),
            self.terms
                .iter()
                .map(|(&k, e)| (k, e.iter().map(|&(r, c, v)| (c, r, v)).collect())),
        )
    }

    /// `l · self`.
    pub fn lmul(&self, l: &DMatrix<f64>) -> Self {
        assert_eq!(l.ncols(), self.rows(), "affine lmul shape");
        let cols = column_nonzeros(l);
        Self::from_terms(
            l * &self.constant,
            self.terms.iter().map(|(&k, e)| {
                let mut out = Vec::new();
                for &(r, c, v) in e {
                    for &(i, lv) in &cols[r] {
                        out.push((i, c, lv * v));
                    }
                }
                (k, out)
            }),
        )
    }

    /// `self · r`.
    pub fn rmul(&self, r: &DMatrix<f64>) -> Self {
        assert_eq!(r.nrows(), self.cols(), "affine rmul shape");
        let rows = column_nonzeros(&r.transpose());
        Self::from_terms(
            &self.constant * r,
            self.terms.iter().map(|(&k, e)| {
                let mut out = Vec::new();
                for &(row, c, v) in e {
                    for &(j, rv) in &rows[c] {
                        out.push((row, j, v * rv));
                    }
                }
                (k, out)
            }),
        )
    }

    /// `self + selfᵀ`.
    pub fn plus_transpose(&self) -> Self {
        self.add(&self.transpose())
    }

    /// Symmetric block matrix from its lower triangle: `lower[i][j]` for
    /// `j <= i`; `None` marks a zero block. Diagonal blocks fix the sizes
    /// and must be present.
    pub fn sym_blocks(lower: &[Vec<Option<Affine>>]) -> Self {
        let sizes: Vec<usize> = lower
            .iter()
            .enumerate()
            .map(|(i, row)| row[i].as_ref().expect("diagonal block").rows())
            .collect();
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let n: usize = sizes.iter().sum();
        let mut constant = DMatrix::zeros(n, n);
        let mut terms: Vec<(usize, Vec<(usize, usize, f64)>)> = Vec::new();
        for (i, row) in lower.iter().enumerate() {
            for (j, blk) in row.iter().enumerate().take(i + 1) {
                let Some(b) = blk else { continue };
                assert_eq!((b.rows(), b.cols()), (sizes[i], sizes[j]), "block ({i},{j}) shape");
                let (ro, co) = (offsets[i], offsets[j]);
                constant.view_mut((ro, co), (b.rows(), b.cols())).copy_from(&b.constant);
                if i != j {
                    constant
                        .view_mut((co, ro), (b.cols(), b.rows()))
                        .copy_from(&b.constant.transpose());
                }
                for (&k, e) in &b.terms {
                    let mut out = Vec::with_capacity(e.len() * 2);
                    for &(r, c, v) in e {
                        out.push((ro + r, co + c, v));
                        if i != j {
                            out.push((co + c, ro + r, v));
                        }
                    }
                    terms.push((k, out));
                }
            }
        }
        Self::from_terms(constant, terms)
    }

    /// Converts a symmetric expression into the SDP block `self ⪯ -shift I`.
    pub fn to_block(&self, shift: f64) -> SdpBlock {
        let n = self.rows();
        assert_eq!(n, self.cols(), "block must be square");
        let tol = 1e-12;
        let mut b = SdpBlock::new(n, shift);
        for i in 0..n {
            for j in i..n {
                let v = self.constant[(i, j)];
                debug_assert!(
                    (v - self.constant[(j, i)]).abs() <= tol * (1.0 + v.abs()),
                    "constant not symmetric at ({i},{j})"
                );
                if v != 0.0 {
                    b.constant.push((i, j, v));
                }
            }
        }
        for (&k, e) in &self.terms {
            let upper: Vec<_> = e.iter().copied().filter(|&(r, c, _)| r <= c).collect();
            debug_assert_eq!(
                upper.iter().filter(|e| e.0 < e.1).count(),
                e.iter().filter(|e| e.0 > e.1).count(),
                "variable {k} not symmetric"
            );
            if !upper.is_empty() {
                b.terms.push(BlockTerm {
                    var: k,
                    entries: upper,
                });
            }
        }
        b
    }
}
