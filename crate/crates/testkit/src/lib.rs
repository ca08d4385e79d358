//! Slow, independent reference implementations.
//!
//! Nothing here shares code with `novelty-core`; each routine recomputes its
//! quantity from the definition so the library can be checked against it.

#![allow(clippy::needless_range_loop)]

/// Standardizes columns by mean and population standard deviation.
pub fn standardize(train: &[Vec<f64>], query: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = train.len() as f64;
    let d = query.len();
    let mut mean = vec![0.0; d];
    for row in train {
        for j in 0..d {
            mean[j] += row[j] / n;
        }
    }
    let mut var = vec![0.0; d];
    for row in train {
        for j in 0..d {
            var[j] += (row[j] - mean[j]).powi(2) / n;
        }
    }
    let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let f = |r: &[f64]| (0..d).map(|j| (r[j] - mean[j]) / sd[j]).collect::<Vec<f64>>();
    (train.iter().map(|r| f(r)).collect(), f(query))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Distances from `q` to every row, sorted by (distance, index).
fn sorted_neighbours(points: &[Vec<f64>], q: &[f64], skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (euclid(p, q), i))
        .collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    v
}

/// Distance to the k-th nearest row by exhaustive sort.
pub fn knn_distance(points: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
    sorted_neighbours(points, q, None)[k - 1].0
}

/// Local outlier factor of `q` w.r.t. `points`, via the full distance matrix.
pub fn lof(points: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
    let n = points.len();
    let mut dm = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dm[i][j] = euclid(&points[i], &points[j]);
        }
    }
    let knn_of = |i: usize| -> Vec<usize> {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dm[i][a].partial_cmp(&dm[i][b]).unwrap().then(a.cmp(&b)));
        others.truncate(k);
        others
    };
    let kdist: Vec<f64> = (0..n).map(|i| dm[i][*knn_of(i).last().unwrap()]).collect();
    let lrd: Vec<f64> = (0..n)
        .map(|i| {
            let nb = knn_of(i);
            let total: f64 = nb.iter().map(|&o| f64::max(kdist[o], dm[i][o])).sum();
            1.0 / f64::max(total / k as f64, 1e-12)
        })
        .collect();
    let nq: Vec<(f64, usize)> = sorted_neighbours(points, q, None).into_iter().take(k).collect();
    let reach: f64 = nq.iter().map(|&(d, o)| f64::max(kdist[o], d)).sum::<f64>() / k as f64;
    let lrd_q = 1.0 / f64::max(reach, 1e-12);
    nq.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / k as f64 / lrd_q
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
            .unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..2 * n {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// √((q−μ)ᵀ (Σ + λI)⁻¹ (q−μ)) with sample covariance and λ = 1e-6·tr(Σ)/d.
pub fn mahalanobis(points: &[Vec<f64>], q: &[f64]) -> f64 {
    let n = points.len();
    let d = q.len();
    let mean: Vec<f64> = (0..d)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            cov[a][b] = points
                .iter()
                .map(|p| (p[a] - mean[a]) * (p[b] - mean[b]))
                .sum::<f64>()
                / (n - 1) as f64;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    for i in 0..d {
        cov[i][i] += 1e-6 * trace / d as f64;
    }
    let inv = invert(&cov);
    let diff: Vec<f64> = (0..d).map(|j| q[j] - mean[j]).collect();
    let mut quad = 0.0;
    for a in 0..d {
        for b in 0..d {
            quad += diff[a] * inv[a][b] * diff[b];
        }
    }
    quad.sqrt()
}

/// AUC by counting every (positive, negative) pair; ties count one half.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// IoU by counting cells of a `res`×`res` grid over the unit square whose
/// centres fall inside each box.
///
/// A centre lies in an axis-aligned box exactly when its x and its y each lie
/// in the box's ranges, so every cell count is a product of per-axis counts.
pub fn iou_grid(a: [f64; 4], b: [f64; 4], res: usize) -> f64 {
    let centre = |i: usize| (i as f64 + 0.5) / res as f64;
    let count = |pred: &dyn Fn(f64) -> bool| (0..res).filter(|&i| pred(centre(i))).count() as u64;
    let within = |v: f64, lo: f64, hi: f64| v >= lo && v < hi;
    let ax = count(&|x| within(x, a[0], a[2]));
    let ay = count(&|y| within(y, a[1], a[3]));
    let bx = count(&|x| within(x, b[0], b[2]));
    let by = count(&|y| within(y, b[1], b[3]));
    let both_x = count(&|x| within(x, a[0], a[2]) && within(x, b[0], b[2]));
    let both_y = count(&|y| within(y, a[1], a[3]) && within(y, b[1], b[3]));
    let inter = both_x * both_y;
    let union = ax * ay + bx * by - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Plug-in MI (nats) between equal-frequency bins of `column` and binary labels.
///
/// Bin edges are the order statistics closing each of the `n_bins` equal-count
/// chunks; a value's bin is the number of edges strictly below it.
pub fn mutual_information(column: &[f64], labels: &[bool], n_bins: usize) -> f64 {
    let n = column.len();
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edges: Vec<f64> = (1..n_bins)
        .map(|k| sorted[(k * n).div_ceil(n_bins) - 1])
        .collect();
    let mut table = vec![[0usize; 2]; n_bins];
    for (v, &l) in column.iter().zip(labels) {
        let b = edges.iter().filter(|&&e| *v > e).count();
        table[b][l as usize] += 1;
    }
    let nf = n as f64;
    let col_tot = [
        table.iter().map(|r| r[0]).sum::<usize>() as f64,
        table.iter().map(|r| r[1]).sum::<usize>() as f64,
    ];
    let mut mi = 0.0;
    for row in &table {
        let row_tot = (row[0] + row[1]) as f64;
        for l in 0..2 {
            if row[l] == 0 {
                continue;
            }
            let pj = row[l] as f64 / nf;
            mi += pj * (pj / ((row_tot / nf) * (col_tot[l] / nf))).ln();
        }
    }
    mi
}

/// Sort by novelty, cut into `windows` equal-count chunks, average the loss.
pub fn loss_curve(novelty: &[f64], losses: &[f64], windows: usize) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64, usize)> = novelty
        .iter()
        .zip(losses)
        .enumerate()
        .map(|(i, (&n, &l))| (n, l, i))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));
    let w = windows.min(pairs.len());
    let n = pairs.len();
    (0..w)
        .map(|k| {
            let chunk = &pairs[k * n / w..(k + 1) * n / w];
            let lo = chunk.first().unwrap().0;
            let hi = chunk.last().unwrap().0;
            let mean = chunk.iter().map(|p| p.1).sum::<f64>() / chunk.len() as f64;
            ((lo + hi) / 2.0, mean)
        })
        .collect()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

/// Sample standard deviation (n − 1 denominator); 0 for a single value.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
