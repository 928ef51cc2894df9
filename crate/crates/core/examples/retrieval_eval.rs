//! Hamming ranking and MAP: single-direction scores, cutoffs, self-exclusion
//! and the two cross-modal directions.

use icmh::eval::{self, Cutoff, MapOptions};
use icmh::BinaryCodeMatrix;
use nalgebra::DMatrix;

fn codes(rows: &[[f64; 4]]) -> BinaryCodeMatrix {
    BinaryCodeMatrix::from_signs(&DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]))
}

pub fn run() -> anyhow::Result<()> {
    let images = codes(&[[1., 1., 1., 1.], [1., 1., 1., -1.], [-1., -1., -1., -1.], [-1., -1., 1., -1.]]);
    let texts = codes(&[[1., 1., -1., 1.], [1., 1., 1., 1.], [-1., -1., -1., 1.], [-1., 1., -1., -1.]]);
    let labels = [0, 0, 1, 1];

    let ranked = eval::rank_gallery(&images, 0, &texts, None);
    println!("image 0 ranks texts {ranked:?}");
    println!("hamming(image 0, text 2) = {}", eval::hamming(&images.row(0), &texts.row(2))?);

    for cutoff in [Cutoff::At(1), Cutoff::At(2), Cutoff::All] {
        let m = eval::cross_modal_map(&images, &texts, &labels, &images, &texts, &labels, MapOptions::at(cutoff))?;
        println!("MAP@{cutoff}: image->text {:.3}, text->image {:.3}, mean {:.3}", m.x_to_y, m.y_to_x, m.average);
    }

    let opts = MapOptions { cutoff: Cutoff::All, exclude_self: true };
    let within = eval::map_score(&images, &labels, &images, &labels, opts)?;
    println!("image->image MAP without self matches: {within:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
