//! Exact arithmetic over affine toric log charts in characteristic p:
//! indexed monoid algebras, divided-power differential operators,
//! p-curvature, the Cartier operator and its splittings, the local
//! Cartier transform, and per-degree cohomology comparisons — all over
//! F_p with no floating point anywhere.

pub mod cartier;
pub mod chart;
pub mod chartfile;
pub mod cohomology;
pub mod connection;
pub mod diffop;
pub mod error;
pub mod fp;
pub mod lattice;
pub mod literal;
pub mod monalg;
pub mod report;
pub mod transform;

pub use error::{LcError, Result};

/// Ready-made charts used throughout tests, docs, and CLI examples.
pub mod samples {
    use crate::chart::Chart;
    use crate::lattice::LatticePoint;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    /// The affine line: P = ⟨1⟩ ⊂ Z, trivial base, log coordinate 1.
    pub fn line(p: u32) -> Chart {
        Chart::new(p, 1, vec![lp(&[1])], vec![], vec![lp(&[1])]).expect("valid chart")
    }

    /// The cone {(m,n) : m ≥ |n|} ⊂ Z² with log coordinates (1,0), (0,1).
    pub fn cone(p: u32) -> Chart {
        Chart::new(
            p,
            2,
            vec![lp(&[1, 1]), lp(&[1, -1]), lp(&[1, 0])],
            vec![],
            vec![lp(&[1, 0]), lp(&[0, 1])],
        )
        .expect("valid chart")
    }

    /// Relative chart: P = N², base monoid Q = ⟨(1,0)⟩, one log coordinate (0,1).
    pub fn relative(p: u32) -> Chart {
        Chart::new(
            p,
            2,
            vec![lp(&[1, 0]), lp(&[0, 1])],
            vec![lp(&[1, 0])],
            vec![lp(&[0, 1])],
        )
        .expect("valid chart")
    }
}
