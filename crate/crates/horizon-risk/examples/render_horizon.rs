//! Render edge images: pixel-area averaging, admissibility checks, edge
//! rows, and the column-mass identity.
//!
//! ```sh
//! cargo run --release --example render_horizon
//! ```

use horizon_risk::contour::ContourShape;
use horizon_risk::horizon::{column_mass, edge_rows, render};
use horizon_risk::EdgeContour;

fn main() -> horizon_risk::Result<()> {
    // A flat edge at height 1/2 renders to an exactly binary image on even
    // grids.
    let half = EdgeContour::constant(0.5)?;
    let grid = render(&half, 8)?;
    println!("flat edge, n = 8, column 0 top to bottom:");
    for j in 0..8 {
        println!("  row {j}: {}", grid.get(0, j));
    }

    // A gently curved edge: fractional coverage appears only in the one or
    // two rows the contour actually crosses.
    let wave = EdgeContour::sinusoid(0.05, 1.0, 0.5, 2.0, 4.0)?;
    let n = 16;
    let grid = render(&wave, n)?;
    println!("\nsinusoid edge, n = {n}, column 3:");
    for j in 0..n {
        let v = grid.get(3, j);
        if v > 0.0 && v < 1.0 {
            println!("  row {j}: {v:.6}   <- fractional (edge crosses here)");
        }
    }

    // Per-column pair of edge-adjacent rows.
    let rows = edge_rows(&wave, n)?;
    println!("\nedge rows by column: {:?}", &rows[..4]);

    // Column mass identity: the pixel sums of a column reproduce the
    // integral of the contour over its footprint.
    let col = 5;
    let pixel_sum: f64 = (0..n).map(|j| grid.get(col, j)).sum();
    let oracle = column_mass(&wave, n, col);
    println!("\ncolumn {col}: pixel sum {pixel_sum:.12} vs contour integral {oracle:.12}");

    // Admissibility checks reject contours that leave the margin band or
    // are steeper than 1-Lipschitz.
    let too_wild = EdgeContour::new(
        ContourShape::Sinusoid {
            amplitude: 0.5,
            frequency: 4.0,
            offset: 0.5,
        },
        2.0,
        400.0,
    );
    println!("\namplitude-0.5 sinusoid rejected: {}", too_wild.unwrap_err());
    Ok(())
}
