//! Numerical toolkit for SL(n, ℝ): Iwasawa/Bruhat/Cartan decompositions,
//! the flag variety, Bruhat sections with their signed AM-valued cocycles,
//! loxodromic elements, Schottky semigroups and toral density checks.

pub mod config;
pub mod density;
pub mod error;
pub mod fixtures;
pub mod flag;
pub mod group;
pub mod io;
pub mod linalg;
pub mod loxodromy;
pub mod plot;
pub mod sampling;
pub mod schottky;
pub mod sections;
pub mod verify;

pub use config::Config;
pub use error::{Error, Result};
pub use flag::{act, cell_margin, flag_distance, flag_of, is_transverse, Flag};
pub use group::{AMElement, CartanVector, GroupElement, Mat, SignVector};
pub use sections::{
    cocycle, eval_section, from_bh, iwasawa_cocycle, to_bh, transition, BHCoordinates, Section,
    SectionKind,
};
