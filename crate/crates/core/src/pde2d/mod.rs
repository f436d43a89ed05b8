//! Method-of-lines discretization of `u_t = ∇·(a ∇u) + s(t, u)` on a
//! rectangle, split by direction.

pub mod adi;
pub mod banded;
pub mod examples;
pub mod grid;
pub mod problem;
pub mod reaction;
pub mod stencil;
pub mod system;

use std::io::{self, Write};

pub use adi::{adi_pde_step, crank_nicolson_unfactored, BoundarySplitAdi};
pub use examples::ProblemId;
pub use grid::{Axis, Boundary, Grid2D};
pub use problem::{CoefficientField, Problem, Reaction};
pub use reaction::{pointwise_reaction_solve, ReactionScheme};
pub use stencil::{build_stencil, StencilOperator};
pub use system::{BoundaryMode, SemiDiscreteSystem};

use crate::format::{fmt_float, fmt_g6};

/// `<run>_t<time>.csv` with the time to six significant digits.
pub fn snapshot_filename(run: &str, t: f64) -> String {
    format!("{run}_t{}.csv", fmt_g6(t))
}

/// Writes `x,y,u[,v,...]` rows, y outer, for a component-major state.
pub fn write_snapshot<W: Write>(mut w: W, grid: &Grid2D, state: &[f64]) -> io::Result<()> {
    let np = grid.len();
    let nc = state.len() / np.max(1);
    let names = ["u", "v", "w", "z"];
    let mut header = String::from("x,y");
    for c in 0..nc {
        header.push(',');
        match names.get(c) {
            Some(n) => header.push_str(n),
            None => header.push_str(&format!("u{c}")),
        }
    }
    writeln!(w, "{header}")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            write!(w, "{},{}", fmt_float(grid.x(i)), fmt_float(grid.y(j)))?;
            for c in 0..nc {
                write!(w, ",{}", fmt_float(state[c * np + k]))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
