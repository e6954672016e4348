//! Post-processing of indicator rasters: quantiles, connected components of
//! high values, and rank correlation.

/// Linear-interpolation quantile of the finite values, `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// A connected set of cells, in grid-index coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub cells: Vec<(usize, usize)>,
    pub centroid: [f64; 2],
    /// `sqrt` of the ratio of the principal second moments; 1 for a disc.
    pub aspect: f64,
    /// Direction of the major axis in degrees, in `[0, 180)`, measured from
    /// the `i` axis towards the `j` axis.
    pub angle_deg: f64,
}

impl Component {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// Elongated along one of the grid diagonals.
    pub fn is_diagonal(&self, min_size: usize, min_aspect: f64, tolerance_deg: f64) -> bool {
        let off = |a: f64| (self.angle_deg - a).abs();
        self.size() >= min_size && self.aspect >= min_aspect && (off(45.0) <= tolerance_deg || off(135.0) <= tolerance_deg)
    }
}

fn shape(cells: &[(usize, usize)]) -> ([f64; 2], f64, f64) {
    let n = cells.len() as f64;
    let mi = cells.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let mj = cells.iter().map(|c| c.1 as f64).sum::<f64>() / n;
    let (mut sii, mut sjj, mut sij) = (0.0, 0.0, 0.0);
    for &(i, j) in cells {
        let (di, dj) = (i as f64 - mi, j as f64 - mj);
        sii += di * di;
        sjj += dj * dj;
        sij += di * dj;
    }
    let tr = (sii + sjj) / n;
    let det = (sii * sjj - sij * sij) / (n * n);
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
    let aspect = if l2 > 0.0 { (l1 / l2).sqrt() } else if l1 > 0.0 { f64::INFINITY } else { 1.0 };
    let angle = (0.5 * (2.0 * sij).atan2(sii - sjj)).to_degrees().rem_euclid(180.0);
    ([mi, mj], aspect, angle)
}

/// 8-connected components of cells with value `>= threshold`, largest first.
/// `values` is row-major with `nx` columns; NaN cells are never included.
pub fn components_above(values: &[f64], nx: usize, threshold: f64) -> Vec<Component> {
    let ny = values.len() / nx;
    let mut seen = vec![false; values.len()];
    let mut out = Vec::new();
    for start in 0..values.len() {
        if seen[start] || !(values[start] >= threshold) {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut cells = Vec::new();
        while let Some(k) = stack.pop() {
            let (i, j) = (k % nx, k / nx);
            cells.push((i, j));
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let q = jj as usize * nx + ii as usize;
                    if !seen[q] && values[q] >= threshold {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        cells.sort_unstable_by_key(|&(i, j)| (j, i));
        let (centroid, aspect, angle_deg) = shape(&cells);
        out.push(Component {
            cells,
            centroid,
            aspect,
            angle_deg,
        });
    }
    out.sort_by(|a, b| b.size().cmp(&a.size()));
    out
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut m = k;
        while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for &q in &idx[k..=m] {
            r[q] = avg;
        }
        k = m + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation over the pairs where both values are finite,
/// with average ranks for ties. `None` with fewer than 3 pairs.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    let r = pearson(&ranks(&x), &ranks(&y));
    r.is_finite().then_some(r)
}
