//! Two-pass connected-component labeling with union-find equivalences.

use crate::mask::{BinaryMask, BoxRect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

/// Result of [`label_components`]: label 0 is background, components are
/// numbered densely from 1 in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    areas: Vec<usize>,
}

impl Labeling {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_components(&self) -> usize {
        self.areas.len()
    }

    /// Area of component `label` (1-based).
    pub fn area(&self, label: u32) -> usize {
        self.areas[label as usize - 1]
    }

    pub fn areas(&self) -> &[usize] {
        &self.areas
    }

    /// Label of the largest component; ties go to the lowest label.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (i, &a) in self.areas.iter().enumerate() {
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((i as u32 + 1, a));
            }
        }
        best.map(|(l, _)| l)
    }

    /// Mask of the pixels whose label satisfies `keep`.
    pub fn mask_where(&self, mut keep: impl FnMut(u32) -> bool) -> BinaryMask {
        let mut keep_table = vec![false; self.areas.len() + 1];
        for (l, slot) in keep_table.iter_mut().enumerate().skip(1) {
            *slot = keep(l as u32);
        }
        let data = self.labels.iter().map(|&l| keep_table[l as usize]).collect();
        BinaryMask::from_vec(self.width, self.height, data)
    }

    pub fn component_box(&self, label: u32) -> Option<BoxRect> {
        let mut bbox: Option<BoxRect> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.label(x, y) == label {
                    bbox = Some(bbox.map_or(BoxRect::point(x, y), |b| b.include(x, y)));
                }
            }
        }
        bbox
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // index 0 is a placeholder so provisional labels start at 1
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Classical two-pass labeling: provisional labels and equivalences in the
/// first raster scan, resolution to dense final labels in the second.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> Labeling {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut uf = UnionFind::new();

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut current = 0u32;
            let mut visit = |nx: usize, ny: usize, current: &mut u32| {
                let l = labels[ny * w + nx];
                if l != 0 {
                    *current = if *current == 0 { l } else { uf.union(*current, l) };
                }
            };
            if x > 0 {
                visit(x - 1, y, &mut current);
            }
            if y > 0 {
                visit(x, y - 1, &mut current);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        visit(x - 1, y - 1, &mut current);
                    }
                    if x + 1 < w {
                        visit(x + 1, y - 1, &mut current);
                    }
                }
            }
            labels[y * w + x] = if current == 0 { uf.make() } else { current };
        }
    }

    let mut dense = vec![0u32; uf.parent.len()];
    let mut areas: Vec<usize> = Vec::new();
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if dense[root] == 0 {
            areas.push(0);
            dense[root] = areas.len() as u32;
        }
        *l = dense[root];
        areas[*l as usize - 1] += 1;
    }

    Labeling {
        width: w,
        height: h,
        labels,
        areas,
    }
}
