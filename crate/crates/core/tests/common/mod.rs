//! Random layout builders shared by the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use unilayout::{BBox, Category, Element, Layout, TaskKind};

pub const W: u32 = 513;
pub const H: u32 = 750;

/// A box with positive width and height inside `w x h`.
pub fn random_box<R: Rng>(rng: &mut R, w: u32, h: u32) -> BBox {
    let x0 = rng.random_range(0..w);
    let y0 = rng.random_range(0..h);
    let x1 = rng.random_range(x0 + 1..=w);
    let y1 = rng.random_range(y0 + 1..=h);
    BBox::new(x0, y0, x1, y1)
}

pub fn random_content<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[char] = &['a', 'Z', '7', ' ', '"', '\\', '\'', ',', '%', 'é', ':', '['];
    let n = rng.random_range(1..12);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

/// Up to `max_n` elements with arbitrary, possibly overlapping boxes drawn
/// from `categories`.
pub fn random_layout<R: Rng>(rng: &mut R, task: TaskKind, max_n: usize, categories: &[Category]) -> Layout {
    let mut l = Layout::new(W, H, task);
    let n = rng.random_range(0..=max_n);
    for _ in 0..n {
        let mut e = Element::new(categories.choose(rng).unwrap().clone(), random_box(rng, W, H));
        if task.content_constrained() && rng.random_bool(0.5) {
            e = e.with_content(random_content(rng));
        }
        l.elements.push(e);
    }
    l
}

/// Pairwise disjoint boxes, by rejection.
pub fn disjoint_layout<R: Rng>(rng: &mut R, task: TaskKind, w: u32, h: u32, max_n: usize) -> Layout {
    let mut l = Layout::new(w, h, task);
    let target = rng.random_range(1..=max_n);
    let mut tries = 0;
    while l.len() < target && tries < 1000 {
        tries += 1;
        let b = random_box(rng, w, h);
        if b.area() > u64::from(w) * u64::from(h) / 6 || l.boxes().any(|o| o.intersection_area(&b) > 0) {
            continue;
        }
        l.push(Category::KNOWN.choose(rng).unwrap().clone(), b);
    }
    l
}
