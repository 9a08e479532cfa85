//! Pairwise-anticommuting 4×4 unitary generators and the product basis they span.
//!
//! Entries of the generators and of all their products lie in `{0, ±1, ±j}`,
//! so everything here is computed over the Gaussian integers and compared
//! with exact equality.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::realification::{real_rank, tilde, vec, ComplexMatrix};

/// Gaussian integer `re + j·im`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const J: GaussInt = GaussInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    pub fn conj(self) -> Self {
        GaussInt::new(self.re, -self.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

impl std::ops::Add for GaussInt {
    type Output = GaussInt;
    fn add(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re + o.re, self.im + o.im)
    }
}

impl std::ops::Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt::new(-self.re, -self.im)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, o: GaussInt) -> GaussInt {
        GaussInt::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Exact 4×4 matrix over the Gaussian integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactMatrix4(pub [[GaussInt; 4]; 4]);

impl ExactMatrix4 {
    pub fn identity() -> Self {
        let mut m = [[GaussInt::ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = GaussInt::ONE;
        }
        ExactMatrix4(m)
    }

    pub fn zero() -> Self {
        ExactMatrix4([[GaussInt::ZERO; 4]; 4])
    }

    /// Builds from rows of `(re, im)` pairs.
    pub fn from_pairs(rows: [[(i64, i64); 4]; 4]) -> Self {
        ExactMatrix4(rows.map(|r| r.map(|(a, b)| GaussInt::new(a, b))))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[j][i] = self.0[i][j].conj();
            }
        }
        out
    }

    pub fn scale(&self, c: GaussInt) -> Self {
        ExactMatrix4(self.0.map(|r| r.map(|v| v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = out.0[i][j] + other.0[i][j];
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_rows(
            &self
                .0
                .iter()
                .map(|r| r.iter().map(|v| v.to_complex()).collect())
                .collect::<Vec<_>>(),
        )
    }
}

impl Mul for ExactMatrix4 {
    type Output = ExactMatrix4;
    fn mul(self, o: ExactMatrix4) -> ExactMatrix4 {
        let mut out = ExactMatrix4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = GaussInt::ZERO;
                for k in 0..4 {
                    acc = acc + self.0[i][k] * o.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl fmt::Debug for ExactMatrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match (v.re, v.im) {
                    (a, 0) => format!("{a}"),
                    (0, b) => format!("{b}j"),
                    (a, b) => format!("{a}{b:+}j"),
                })
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// A list of matrices expected to anticommute pairwise and be unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct AnticommutingSet {
    pub n: usize,
    pub generators: Vec<ExactMatrix4>,
}

/// The four generators `F1..F4`.
pub fn generators4() -> AnticommutingSet {
    let f1 = ExactMatrix4::from_pairs([
        [(0, 1), (0, 0), (0, 0), (0, 0)],
        [(0, 0), (0, -1), (0, 0), (0, 0)],
        [(0, 0), (0, 0), (0, -1), (0, 0)],
        [(0, 0), (0, 0), (0, 0), (0, 1)],
    ]);
    let f2 = ExactMatrix4::from_pairs([
        [(0, 0), (1, 0), (0, 0), (0, 0)],
        [(-1, 0), (0, 0), (0, 0), (0, 0)],
        [(0, 0), (0, 0), (0, 0), (1, 0)],
        [(0, 0), (0, 0), (-1, 0), (0, 0)],
    ]);
    let f3 = ExactMatrix4::from_pairs([
        [(0, 0), (0, 1), (0, 0), (0, 0)],
        [(0, 1), (0, 0), (0, 0), (0, 0)],
        [(0, 0), (0, 0), (0, 0), (0, 1)],
        [(0, 0), (0, 0), (0, 1), (0, 0)],
    ]);
    let f4 = ExactMatrix4::from_pairs([
        [(0, 0), (0, 0), (1, 0), (0, 0)],
        [(0, 0), (0, 0), (0, 0), (-1, 0)],
        [(-1, 0), (0, 0), (0, 0), (0, 0)],
        [(0, 0), (1, 0), (0, 0), (0, 0)],
    ]);
    AnticommutingSet {
        n: 4,
        generators: vec![f1, f2, f3, f4],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `F_i F_j + F_j F_i ≠ 0` (0-based indices).
    NotAnticommuting { i: usize, j: usize },
    /// `F_iᴴ F_i ≠ I`.
    NotUnitary { i: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotAnticommuting { i, j } => {
                write!(f, "F{} and F{} do not anticommute", i + 1, j + 1)
            }
            Violation::NotUnitary { i } => write!(f, "F{} is not unitary", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnticommutingReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Exact check of pairwise anticommutation and unitarity.
pub fn verify_anticommuting(set: &AnticommutingSet) -> AnticommutingReport {
    let g = &set.generators;
    let mut violations = Vec::new();
    for (i, f) in g.iter().enumerate() {
        if f.adjoint() * *f != ExactMatrix4::identity() {
            violations.push(Violation::NotUnitary { i });
        }
    }
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if !(g[i] * g[j]).add(&(g[j] * g[i])).is_zero() {
                violations.push(Violation::NotAnticommuting { i, j });
            }
        }
    }
    AnticommutingReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// One basis element `c · F1^λ1 F2^λ2 F3^λ3 F4^λ4` with `c ∈ {1, j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement {
    pub lambda: [u8; 4],
    pub times_j: bool,
    pub matrix: ExactMatrix4,
}

/// The 32-element real basis: 16 products in lexicographic `λ` order, then
/// the same 16 multiplied by `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBasis {
    pub elements: Vec<BasisElement>,
}

impl MatrixBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, lambda: [u8; 4], times_j: bool) -> Option<&ExactMatrix4> {
        self.elements
            .iter()
            .find(|e| e.lambda == lambda && e.times_j == times_j)
            .map(|e| &e.matrix)
    }

    /// Rank over ℝ of the `tilde(vec(·))` images.
    pub fn real_rank(&self) -> usize {
        let vs: Vec<_> = self
            .elements
            .iter()
            .map(|e| tilde(&vec(&e.matrix.to_complex())))
            .collect();
        real_rank(&vs)
    }
}

/// Ordered product `F1^λ1 · F2^λ2 · F3^λ3 · F4^λ4`.
pub fn monomial(set: &AnticommutingSet, lambda: [u8; 4]) -> ExactMatrix4 {
    set.generators
        .iter()
        .zip(lambda)
        .filter(|(_, l)| *l == 1)
        .fold(ExactMatrix4::identity(), |acc, (f, _)| acc * *f)
}

pub fn product_basis(set: &AnticommutingSet) -> MatrixBasis {
    assert_eq!(
        set.generators.len(),
        4,
        "product_basis expects four generators"
    );
    let mut elements = Vec::with_capacity(32);
    for times_j in [false, true] {
        for code in 0..16u8 {
            let lambda = [(code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1];
            let m = monomial(set, lambda);
            let matrix = if times_j { m.scale(GaussInt::J) } else { m };
            elements.push(BasisElement {
                lambda,
                times_j,
                matrix,
            });
        }
    }
    MatrixBasis { elements }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_inner(a: &ExactMatrix4, b: &ExactMatrix4) -> GaussInt {
        let p = a.adjoint() * *b;
        (0..4).fold(GaussInt::ZERO, |acc, i| acc + p.0[i][i])
    }

    #[test]
    fn generator_entries_as_displayed() {
        let g = generators4().generators;
        assert_eq!(g[0].0[0][0], GaussInt::J);
        assert_eq!(g[0].0[1][1], -GaussInt::J);
        assert_eq!(g[0].0[2][2], -GaussInt::J);
        assert_eq!(g[0].0[3][3], GaussInt::J);
        assert_eq!(
            g[1].0[0],
            [
                GaussInt::ZERO,
                GaussInt::ONE,
                GaussInt::ZERO,
                GaussInt::ZERO
            ]
        );
        assert_eq!(
            g[1].0[1],
            [
                -GaussInt::ONE,
                GaussInt::ZERO,
                GaussInt::ZERO,
                GaussInt::ZERO
            ]
        );
        assert_eq!(g[3].0[0][2], GaussInt::ONE);
        assert_eq!(g[3].0[2][0], -GaussInt::ONE);
    }

    #[test]
    fn generators_anticommute() {
        let report = verify_anticommuting(&generators4());
        assert!(report.ok, "{:?}", report.violations);
    }

    #[test]
    fn identity_commutes_with_everything() {
        let g = generators4().generators;
        let set = AnticommutingSet {
            n: 4,
            generators: vec![ExactMatrix4::identity(), g[0]],
        };
        let r = verify_anticommuting(&set);
        assert!(!r.ok);
        assert_eq!(
            r.violations,
            vec![Violation::NotAnticommuting { i: 0, j: 1 }]
        );
    }

    #[test]
    fn sign_flip_breaks_the_pair() {
        let g = generators4().generators;
        let mut f1 = g[0];
        f1.0[0][0] = -f1.0[0][0];
        let set = AnticommutingSet {
            n: 4,
            generators: vec![f1, g[1]],
        };
        let r = verify_anticommuting(&set);
        assert!(!r.ok);
        assert_eq!(
            r.violations,
            vec![Violation::NotAnticommuting { i: 0, j: 1 }]
        );
    }

    #[test]
    fn basis_ordering_and_rank() {
        let set = generators4();
        let basis = product_basis(&set);
        assert_eq!(basis.len(), 32);
        assert_eq!(basis.elements[0].matrix, ExactMatrix4::identity());
        assert_eq!(basis.elements[8].lambda, [1, 0, 0, 0]);
        assert_eq!(basis.elements[8].matrix, set.generators[0]);
        assert!(basis.elements[16].times_j);
        assert_eq!(basis.real_rank(), 32);
    }

    #[test]
    fn basis_elements_unitary_and_trace_orthogonal() {
        let basis = product_basis(&generators4());
        for e in &basis.elements {
            assert_eq!(e.matrix.adjoint() * e.matrix, ExactMatrix4::identity());
        }
        let plain: Vec<_> = basis.elements.iter().filter(|e| !e.times_j).collect();
        for (a, ea) in plain.iter().enumerate() {
            for (b, eb) in plain.iter().enumerate() {
                let t = trace_inner(&ea.matrix, &eb.matrix);
                if a == b {
                    assert_eq!(t, GaussInt::new(4, 0));
                } else {
                    assert_eq!(t, GaussInt::ZERO, "elements {a},{b}");
                }
            }
        }
    }

    #[test]
    fn rank_is_order_invariant() {
        let mut basis = product_basis(&generators4());
        basis.elements.reverse();
        basis.elements.swap(3, 17);
        assert_eq!(basis.real_rank(), 32);
    }
}
