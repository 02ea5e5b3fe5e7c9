//! Dilation, erosion and boundary bands on a small L-shaped mask.

use denise::morphology::{boundary_band, dilate, erode, StructuringElement};
use denise::BinaryMask;

fn show(title: &str, m: &BinaryMask) {
    println!("{title}:");
    for y in 0..m.height() {
        let row: String = (0..m.width()).map(|x| if m.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() {
    let mut mask = BinaryMask::new(14, 12);
    for y in 2..10 {
        for x in 2..6 {
            mask.set(x, y, true);
        }
    }
    for y in 6..10 {
        for x in 6..12 {
            mask.set(x, y, true);
        }
    }
    show("mask", &mask);
    show("dilate Square(1)", &dilate(&mask, StructuringElement::Square(1)));
    show("dilate Disk(2)", &dilate(&mask, StructuringElement::Disk(2)));
    show("erode Square(1)", &erode(&mask, StructuringElement::Square(1)));
    show("boundary band d=1", &boundary_band(&mask, 1));
}
