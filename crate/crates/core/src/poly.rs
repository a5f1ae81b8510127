//! Monic complex polynomials, root matching and the explicit root
//! perturbation bound.

use nalgebra::{Complex, ComplexField};

use crate::error::{CfsError, Result};
use crate::linalg::eigenvalues;
use crate::scalar::{creal, eps, lit, to_f64, CMat, Real};

/// `λ^g + c_{g-1} λ^{g-1} + … + c_0`.
///
/// Polynomials built from roots remember them (with multiplicities), so
/// that matching and bounds can use exact ground truth instead of a
/// numerically ill-posed multiplicity detection.
#[derive(Debug, Clone, PartialEq)]
pub struct MonicPolynomial<T: Real> {
    coeffs: Vec<Complex<T>>,
    known_roots: Option<Vec<(Complex<T>, usize)>>,
}

impl<T: Real> MonicPolynomial<T> {
    /// From `c_0, …, c_{g-1}`.
    pub fn from_coeffs(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CfsError::InvalidArgument("monic polynomial needs degree >= 1".into()));
        }
        Ok(Self { coeffs, known_roots: None })
    }

    /// `Π (λ - r)^m` over the given `(root, multiplicity)` pairs.
    pub fn from_roots(roots: &[(Complex<T>, usize)]) -> Result<Self> {
        let degree: usize = roots.iter().map(|(_, m)| m).sum();
        if degree == 0 {
            return Err(CfsError::InvalidArgument("monic polynomial needs degree >= 1".into()));
        }
        // Coefficients of the running product, lowest order first, leading 1 included.
        let mut full = vec![creal(T::one())];
        for &(r, m) in roots {
            for _ in 0..m {
                let mut next = vec![creal(T::zero()); full.len() + 1];
                for (k, &c) in full.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * r;
                }
                full = next;
            }
        }
        full.pop();
        let known = roots.iter().filter(|(_, m)| *m > 0).copied().collect();
        Ok(Self { coeffs: full, known_roots: Some(known) })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Copy with `delta` added to the coefficients; known roots are dropped.
    pub fn perturbed(&self, delta: &[Complex<T>]) -> Result<Self> {
        if delta.len() != self.degree() {
            return Err(CfsError::DegreeMismatch { left: self.degree(), right: delta.len() });
        }
        let coeffs = self.coeffs.iter().zip(delta).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, known_roots: None })
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(creal(T::one()), |acc, &c| acc * z + c)
    }

    /// `max_k |c_k - c̃_k|`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.degree() != other.degree() {
            return Err(CfsError::DegreeMismatch { left: self.degree(), right: other.degree() });
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).modulus()).fold(T::zero(), |a, b| a.max(b)))
    }

    pub fn known_roots(&self) -> Option<&[(Complex<T>, usize)]> {
        self.known_roots.as_deref()
    }

    /// Roots with multiplicity: the known roots if available, otherwise the
    /// eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex<T>> {
        match &self.known_roots {
            Some(known) => known.iter().flat_map(|&(r, m)| std::iter::repeat_n(r, m)).collect(),
            None => eigenvalues(&self.companion()),
        }
    }

    /// Companion matrix with ones on the subdiagonal and `-c` in the last column.
    pub fn companion(&self) -> CMat<T> {
        let g = self.degree();
        let mut m = CMat::zeros(g, g);
        for k in 1..g {
            m[(k, k - 1)] = creal(T::one());
        }
        for k in 0..g {
            m[(k, g - 1)] = -self.coeffs[k];
        }
        m
    }

    /// Root multiplicity `p_i` for every root returned by [`Self::roots`].
    pub fn multiplicities(&self) -> Vec<usize> {
        match &self.known_roots {
            Some(known) => known.iter().flat_map(|&(_, m)| std::iter::repeat_n(m, m)).collect(),
            None => {
                let roots = self.roots();
                let labels = cluster_roots(&roots);
                labels.iter().map(|&l| labels.iter().filter(|&&k| k == l).count()).collect()
            }
        }
    }
}

/// Agglomerative clustering of numerically computed roots. Two clusters
/// merge when their centroids are closer than `10 eps^{1/m} scale`, with `m`
/// the size of the merged cluster, the accuracy to which an `m`-fold root
/// is resolved. Returns a cluster label per root.
pub fn cluster_roots<T: Real>(roots: &[Complex<T>]) -> Vec<usize> {
    let scale = roots.iter().fold(T::one(), |a, r| a.max(r.modulus()));
    let mut clusters: Vec<Vec<usize>> = (0..roots.len()).map(|i| vec![i]).collect();
    let centroid = |c: &[usize]| {
        let s = c.iter().fold(creal(T::zero()), |a, &i| a + roots[i]);
        s / creal(lit::<T>(c.len() as f64))
    };
    loop {
        let mut best: Option<(usize, usize, T)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let dist = (centroid(&clusters[a]) - centroid(&clusters[b])).modulus();
                let m = clusters[a].len() + clusters[b].len();
                let tol = lit::<T>(10.0) * eps::<T>().powf(lit(1.0 / m as f64)) * scale;
                if dist <= tol && best.is_none_or(|(_, _, d)| dist < d) {
                    best = Some((a, b, dist));
                }
            }
        }
        match best {
            Some((a, b, _)) => {
                let merged = clusters.remove(b);
                clusters[a].extend(merged);
            }
            None => break,
        }
    }
    let mut labels = vec![0; roots.len()];
    for (l, c) in clusters.iter().enumerate() {
        for &i in c {
            labels[i] = l;
        }
    }
    labels
}

/// Perfect matching in a bipartite graph given by `allowed(i, j)`
/// (Kuhn's augmenting paths). Returns `pairing[i] = j`.
fn perfect_matching(n: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    fn augment(
        i: usize,
        n: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if allowed(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, n, allowed, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, n, allowed, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut pairing = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        pairing[o.expect("perfect matching")] = j;
    }
    Some(pairing)
}

/// Bijection minimizing the maximal distance `|a_i - b_σ(i)|`.
pub fn bottleneck_assignment<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<usize> {
    let n = a.len();
    let dist: Vec<Vec<T>> = a.iter().map(|x| b.iter().map(|y| (x - y).modulus()).collect()).collect();
    let mut thresholds: Vec<T> = dist.iter().flatten().copied().collect();
    thresholds.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    thresholds.dedup();
    let (mut lo, mut hi) = (0usize, thresholds.len().saturating_sub(1));
    while lo < hi {
        let mid = (lo + hi) / 2;
        let t = thresholds[mid];
        if perfect_matching(n, &|i, j| dist[i][j] <= t).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t = thresholds.get(lo).copied().unwrap_or(T::zero());
    perfect_matching(n, &|i, j| dist[i][j] <= t).unwrap_or_else(|| (0..n).collect())
}

#[derive(Debug, Clone)]
pub struct RootMatch<T: Real> {
    pub roots_p: Vec<Complex<T>>,
    pub roots_q: Vec<Complex<T>>,
    /// `pairing[i]` is the index in `roots_q` matched to `roots_p[i]`.
    pub pairing: Vec<usize>,
    pub deviations: Vec<T>,
    pub multiplicities: Vec<usize>,
}

impl<T: Real> RootMatch<T> {
    pub fn max_deviation(&self) -> T {
        self.deviations.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

pub fn match_roots<T: Real>(p: &MonicPolynomial<T>, q: &MonicPolynomial<T>) -> Result<RootMatch<T>> {
    if p.degree() != q.degree() {
        return Err(CfsError::DegreeMismatch { left: p.degree(), right: q.degree() });
    }
    let roots_p = p.roots();
    let roots_q = q.roots();
    let pairing = bottleneck_assignment(&roots_p, &roots_q);
    let deviations = pairing.iter().enumerate().map(|(i, &j)| (roots_p[i] - roots_q[j]).modulus()).collect();
    Ok(RootMatch { multiplicities: p.multiplicities(), roots_p, roots_q, pairing, deviations })
}

#[derive(Debug, Clone)]
pub struct RootBoundEntry<T> {
    pub root: Complex<T>,
    pub multiplicity: usize,
    pub deviation: T,
    /// Admissible deviation, in the original (unscaled) units.
    pub delta: T,
}

#[derive(Debug, Clone)]
pub struct RootBoundReport<T: Real> {
    pub holds: bool,
    /// Rescaling factor bringing all roots of `P` into the unit ball.
    pub nu: T,
    /// Minimal distance of distinct rescaled roots (`None` for a single root).
    pub min_separation: Option<T>,
    /// `||ΔP||` of the rescaled polynomials.
    pub coeff_distance: T,
    pub entries: Vec<RootBoundEntry<T>>,
}

/// Checks `|λ_i - λ̃_i| ≤ δ_i` with
/// `δ_i = (g 2^{2g-p_i+1} / D^{g-p_i} ||ΔP||)^{1/p_i}` after rescaling the
/// roots of `P` into the unit ball, for some ordering of the roots of `Q`.
pub fn root_bound_check<T: Real>(p: &MonicPolynomial<T>, q: &MonicPolynomial<T>) -> Result<RootBoundReport<T>> {
    let g = p.degree();
    if q.degree() != g {
        return Err(CfsError::DegreeMismatch { left: g, right: q.degree() });
    }
    let roots_p = p.roots();
    let multiplicities = p.multiplicities();
    let nu = roots_p.iter().fold(T::one(), |a, r| a.max(r.modulus()));

    // Rescaled coefficients: c_k -> c_k nu^{k-g}.
    let coeff_distance = p
        .coeffs()
        .iter()
        .zip(q.coeffs())
        .enumerate()
        .map(|(k, (a, b))| (a - b).modulus() * nu.powi(k as i32 - g as i32))
        .fold(T::zero(), |a, b| a.max(b));

    let labels: Vec<usize> = match p.known_roots() {
        Some(known) => known.iter().enumerate().flat_map(|(l, &(_, m))| std::iter::repeat_n(l, m)).collect(),
        None => cluster_roots(&roots_p),
    };
    let mut min_separation: Option<T> = None;
    for i in 0..g {
        for j in 0..g {
            if labels[i] != labels[j] {
                let d = (roots_p[i] - roots_p[j]).modulus() / nu;
                min_separation = Some(min_separation.map_or(d, |m: T| m.min(d)));
            }
        }
    }

    let two = lit::<T>(2.0);
    let deltas: Vec<T> = multiplicities
        .iter()
        .map(|&pi| {
            let sep_factor = match min_separation {
                Some(d) => d.powi((g - pi) as i32),
                None => T::one(),
            };
            let base = lit::<T>(g as f64) * two.powi((2 * g - pi + 1) as i32) / sep_factor * coeff_distance;
            base.powf(lit(1.0 / pi as f64))
        })
        .collect();
    let limit = min_separation.map_or(T::one(), |d| d / two);
    let worst = deltas.iter().fold(T::zero(), |a, &b| a.max(b));
    if worst >= limit {
        return Err(CfsError::PerturbationTooLarge { delta: to_f64(worst), limit: to_f64(limit) });
    }

    let roots_q = q.roots();
    let dist = |i: usize, j: usize| (roots_p[i] - roots_q[j]).modulus();
    let feasible = perfect_matching(g, &|i, j| dist(i, j) <= nu * deltas[i]);
    let holds = feasible.is_some();
    let pairing = feasible.unwrap_or_else(|| bottleneck_assignment(&roots_p, &roots_q));
    let entries = (0..g)
        .map(|i| RootBoundEntry {
            root: roots_p[i],
            multiplicity: multiplicities[i],
            deviation: dist(i, pairing[i]),
            delta: nu * deltas[i],
        })
        .collect();
    Ok(RootBoundReport { holds, nu, min_separation, coeff_distance, entries })
}
