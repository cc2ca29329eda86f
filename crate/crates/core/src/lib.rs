//! Double cosets of the upper triangular subgroup `B` in `GL_n(A)` for finite
//! chain rings `A`: ring and matrix arithmetic, double-coset invariants, the
//! complete classification for `n <= 3`, and a brute-force orbit oracle.

pub mod classify;
pub mod error;
pub mod experiments;
pub mod invariants;
pub mod matrix;
pub mod oracle;
pub mod ring;

pub use classify::{CosetLabel, M2Label, N2Label, N3Label};
pub use error::{Error, Result};
pub use experiments::{Check, DependenceTable, Experiment42Result, Suite, SuiteReport};
pub use invariants::{IntersectionMatrix, IntersectionProfile, Invariants, PermMatrix};
pub use matrix::{random_borel, random_gl, Mat, Partition};
pub use oracle::{GeneratorSet, Method, OracleConfig, OrbitReport};
pub use ring::{Elem, Flavor, RingSpec};
