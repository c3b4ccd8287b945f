//! Exact Euclidean distance transform with nearest-site tracking.
//!
//! Separable lower-envelope-of-parabolas transform run once per axis. Each
//! pass carries the index of the site that produced the minimum so the final
//! field also answers "which site is nearest".

const INF: f64 = 1e20;

/// Squared distances (in voxel units) and nearest-site linear indices.
#[derive(Debug, Clone, Default)]
pub struct DistanceField {
    pub sq: Vec<f64>,
    pub site: Vec<usize>,
}

impl DistanceField {
    pub const NO_SITE: usize = usize::MAX;

    pub fn has_sites(&self) -> bool {
        self.site.first().is_some_and(|&s| s != Self::NO_SITE)
    }
}

/// 1-D transform of `f` in place, `feat` follows the argmin.
fn transform_1d(
    f: &[f64],
    feat_in: &[usize],
    out: &mut [f64],
    feat_out: &mut [usize],
    v: &mut [usize],
    z: &mut [f64],
) {
    let n = f.len();
    let mut k = 0usize;
    let mut first = None;
    for (q, &fq) in f.iter().enumerate() {
        if fq < INF {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = INF);
        feat_out.iter_mut().for_each(|o| *o = DistanceField::NO_SITE);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in (q0 + 1)..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = d * d + f[p];
        feat_out[q] = feat_in[p];
    }
}

/// Distance transform of the voxels flagged by `is_site` on an `nx*ny*nz`
/// grid stored x-fastest.
pub fn distance_transform(dims: [usize; 3], is_site: impl Fn(usize) -> bool) -> DistanceField {
    let total = dims[0] * dims[1] * dims[2];
    let mut sq = vec![INF; total];
    let mut site = vec![DistanceField::NO_SITE; total];
    for i in 0..total {
        if is_site(i) {
            sq[i] = 0.0;
            site[i] = i;
        }
    }
    let maxn = *dims.iter().max().unwrap_or(&1);
    let mut f = vec![0.0; maxn];
    let mut fi = vec![0usize; maxn];
    let mut o = vec![0.0; maxn];
    let mut oi = vec![0usize; maxn];
    let mut v = vec![0usize; maxn];
    let mut z = vec![0.0; maxn + 1];
    // along x the input is binary, so two sweeps give the nearest site per row
    let nx = dims[0];
    for row in sq.chunks_mut(nx).zip(site.chunks_mut(nx)) {
        let (d, s) = row;
        let mut last = None;
        for q in 0..nx {
            if s[q] != DistanceField::NO_SITE {
                last = Some(q);
            } else if let Some(l) = last {
                d[q] = ((q - l) * (q - l)) as f64;
                s[q] = s[l];
            }
        }
        let mut next: Option<usize> = None;
        for q in (0..nx).rev() {
            if d[q] == 0.0 {
                next = Some(q);
            } else if let Some(nq) = next {
                let dd = ((nq - q) * (nq - q)) as f64;
                if dd < d[q] {
                    d[q] = dd;
                    s[q] = s[nq];
                }
            }
        }
    }
    // the other axes gather whole x-rows so memory is read contiguously
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut bsq = vec![0.0; maxn * nx];
    let mut bsite = vec![0usize; maxn * nx];
    for axis in 1..3 {
        let n = dims[axis];
        let other = if axis == 1 { 2 } else { 1 };
        for j in 0..dims[other] {
            let base = j * strides[other];
            for q in 0..n {
                let start = base + q * strides[axis];
                bsq[q * nx..(q + 1) * nx].copy_from_slice(&sq[start..start + nx]);
                bsite[q * nx..(q + 1) * nx].copy_from_slice(&site[start..start + nx]);
            }
            for i in 0..nx {
                for q in 0..n {
                    f[q] = bsq[q * nx + i];
                    fi[q] = bsite[q * nx + i];
                }
                transform_1d(&f[..n], &fi[..n], &mut o[..n], &mut oi[..n], &mut v, &mut z);
                for q in 0..n {
                    bsq[q * nx + i] = if o[q] >= INF { INF } else { o[q] };
                    bsite[q * nx + i] = oi[q];
                }
            }
            for q in 0..n {
                let start = base + q * strides[axis];
                sq[start..start + nx].copy_from_slice(&bsq[q * nx..(q + 1) * nx]);
                site[start..start + nx].copy_from_slice(&bsite[q * nx..(q + 1) * nx]);
            }
        }
    }
    DistanceField { sq, site }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let dims = [7, 5, 4];
        let sites = [3usize, 40, 101, 77];
        let field = distance_transform(dims, |i| sites.contains(&i));
        let coord = |i: usize| {
            [
                (i % dims[0]) as f64,
                ((i / dims[0]) % dims[1]) as f64,
                (i / (dims[0] * dims[1])) as f64,
            ]
        };
        for i in 0..dims.iter().product() {
            let c = coord(i);
            let best = sites
                .iter()
                .map(|&s| {
                    let d = coord(s);
                    (c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2) + (c[2] - d[2]).powi(2)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((field.sq[i] - best).abs() < 1e-9, "voxel {i}");
            let d = coord(field.site[i]);
            let got = (c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2) + (c[2] - d[2]).powi(2);
            assert!((got - best).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_site_set() {
        let field = distance_transform([3, 3, 3], |_| false);
        assert!(!field.has_sites());
        assert!(field.sq.iter().all(|&d| d >= INF));
    }
}
