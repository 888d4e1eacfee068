//! Spheric clusterings of ultrametric spaces and distance histograms.
//!
//! In an ultrametric space two closed spheres of the same radius are
//! either disjoint or equal, so the spheres of radius `r` partition the
//! points, and that partition is perfect: every within-cluster distance is
//! below every between-cluster distance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::semiring::DissimMatrix;
use crate::ultrametric::{is_ultrametric, UltraMatrix};
use crate::value::ExtValue;

/// Closed sphere `B[center, r] = { j : a[center][j] ≤ r }`, sorted.
pub fn closed_sphere(a: &DissimMatrix, center: usize, r: ExtValue) -> Result<Vec<usize>> {
    let n = a.order();
    if center >= n {
        return Err(Error::InvalidArgument(format!(
            "center {center} out of range for {n} points"
        )));
    }
    Ok((0..n).filter(|&j| a.get(center, j) <= r).collect())
}

/// A partition of `0..n` into clusters labelled `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    num_clusters: usize,
    radius: Option<ExtValue>,
}

impl Clustering {
    /// Labels must cover `0..k` with no gaps.
    pub fn new(assignment: Vec<usize>, radius: Option<ExtValue>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; k];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!(
                "cluster ids are not contiguous: id {missing} is unused"
            )));
        }
        Ok(Clustering {
            assignment,
            num_clusters: k,
            radius,
        })
    }

    /// Groups points into clusters and renumbers by first appearance.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &p in members {
                if p >= n || assignment[p] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "point {p} is out of range or listed twice"
                    )));
                }
                assignment[p] = c;
            }
        }
        if assignment.contains(&usize::MAX) {
            return Err(Error::InvalidArgument("some points are unassigned".into()));
        }
        Clustering::new(assignment, None)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn radius(&self) -> Option<ExtValue> {
        self.radius
    }

    /// Members of each cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (p, &c) in self.assignment.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    /// True if every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Clustering) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.num_clusters];
        for (p, &c) in self.assignment.iter().enumerate() {
            let target = coarser.assignment[p];
            if image[c] == usize::MAX {
                image[c] = target;
            } else if image[c] != target {
                return false;
            }
        }
        true
    }
}

/// The `r`-spheric clustering: `i` and `j` share a cluster iff
/// `u[i][j] ≤ r`. Labels follow first appearance.
pub fn spheric_clustering(u: &UltraMatrix, r: ExtValue) -> Clustering {
    let n = u.order();
    let mut assignment = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if assignment[i] != usize::MAX {
            continue;
        }
        for j in i..n {
            if assignment[j] == usize::MAX && u.get(i, j) <= r {
                assignment[j] = next;
            }
        }
        next += 1;
    }
    Clustering {
        assignment,
        num_clusters: next,
        radius: Some(r),
    }
}

/// [`spheric_clustering`] for a matrix not yet known to be ultrametric.
/// Rejects anything else, since spheres of a general dissimilarity can
/// overlap without coinciding.
pub fn spheric_clustering_checked(a: &DissimMatrix, r: ExtValue) -> Result<Clustering> {
    if !is_ultrametric(a) {
        return Err(Error::Precondition(
            "spheric clustering requires an ultrametric matrix".into(),
        ));
    }
    Ok(spheric_clustering(
        &UltraMatrix::from_dissim_unchecked(a.clone()),
        r,
    ))
}

/// Whether the largest within-cluster dissimilarity is strictly below the
/// smallest between-cluster one. A side with no pairs imposes nothing.
pub fn is_perfect_clustering(a: &DissimMatrix, c: &Clustering) -> Result<bool> {
    let n = a.order();
    if c.len() != n {
        return Err(Error::InvalidArgument(format!(
            "clustering has {} points, matrix has {n}",
            c.len()
        )));
    }
    let mut within: Option<ExtValue> = None;
    let mut between: Option<ExtValue> = None;
    let labels = c.assignment();
    for i in 0..n {
        for j in i + 1..n {
            let v = a.get(i, j);
            if labels[i] == labels[j] {
                within = Some(within.map_or(v, |w| w.max(v)));
            } else {
                between = Some(between.map_or(v, |b| b.min(v)));
            }
        }
    }
    Ok(match (within, between) {
        (Some(w), Some(b)) => w < b,
        _ => true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistogramMode {
    /// One bar per distinct value.
    #[default]
    Distinct,
    /// Equal-width bins over the finite range.
    Binned,
}

impl FromStr for HistogramMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "distinct" => Ok(HistogramMode::Distinct),
            "binned" => Ok(HistogramMode::Binned),
            other => Err(format!("unknown histogram mode {other:?} (expected distinct or binned)")),
        }
    }
}

impl fmt::Display for HistogramMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistogramMode::Distinct => "distinct",
            HistogramMode::Binned => "binned",
        })
    }
}

/// A low point of the histogram, usable as a clustering radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Valley {
    /// Radius suggested by this valley.
    pub position: f64,
    /// Ranking key: gap width in distinct mode, depth below the lower of
    /// the two flanking peaks in binned mode.
    pub strength: f64,
    /// Bar or bin just left of the valley (distinct mode), or the valley
    /// bin itself (binned mode).
    pub index: usize,
}

/// Counts of the off-diagonal pairs `i < j` of a dissimilarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    pub mode: HistogramMode,
    /// Distinct mode: the sorted distinct finite values, one per bar.
    /// Binned mode: `bins + 1` edges.
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
    /// Pairs at infinite dissimilarity, left out of `counts`.
    pub overflow: usize,
    /// Indices into `counts`.
    pub peaks: Vec<usize>,
    pub valleys: Vec<Valley>,
}

impl DistanceHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.overflow
    }

    pub fn bar_count(&self) -> usize {
        self.counts.len()
    }

    /// Where bar `i` sits: its value, or its bin midpoint.
    pub fn bar_position(&self, i: usize) -> f64 {
        match self.mode {
            HistogramMode::Distinct => self.values[i],
            HistogramMode::Binned => 0.5 * (self.values[i] + self.values[i + 1]),
        }
    }

    /// Number of peaks `p`. In distinct mode every bar is a peak; with a
    /// `threshold` only bars strictly above it are counted there.
    pub fn peak_count(&self, threshold: Option<f64>) -> usize {
        match (self.mode, threshold) {
            (HistogramMode::Distinct, Some(t)) => {
                self.peaks.iter().filter(|&&i| self.values[i] > t).count()
            }
            _ => self.peaks.len(),
        }
    }
}

/// Default bin count: `⌈√(n(n−1)/2)⌉`, at least 1.
pub fn default_bins(n: usize) -> usize {
    let pairs = (n * n.saturating_sub(1) / 2) as u64;
    let mut b = pairs.isqrt();
    if b * b < pairs {
        b += 1;
    }
    b.max(1) as usize
}

/// Histogram of the off-diagonal dissimilarities. `bins` is required in
/// binned mode and rejected in distinct mode; pass
/// `Some(default_bins(n))` for the default.
pub fn distance_histogram(
    a: &DissimMatrix,
    mode: HistogramMode,
    bins: Option<usize>,
) -> Result<DistanceHistogram> {
    let mut overflow = 0;
    let finite: Vec<f64> = a
        .upper_triangle()
        .filter_map(|v| {
            if v.is_infinite() {
                overflow += 1;
                None
            } else {
                Some(v.get())
            }
        })
        .collect();
    match mode {
        HistogramMode::Distinct => {
            if bins.is_some() {
                return Err(Error::InvalidArgument(
                    "bin count only applies to binned mode".into(),
                ));
            }
            Ok(distinct_histogram(&finite, overflow))
        }
        HistogramMode::Binned => {
            let bins = bins.ok_or_else(|| {
                Error::InvalidArgument("binned mode needs a bin count".into())
            })?;
            if bins == 0 {
                return Err(Error::InvalidArgument("bin count must be positive".into()));
            }
            Ok(binned_histogram(&finite, bins, overflow))
        }
    }
}

fn distinct_histogram(finite: &[f64], overflow: usize) -> DistanceHistogram {
    let mut tally: BTreeMap<ExtValue, usize> = BTreeMap::new();
    for &v in finite {
        *tally.entry(ExtValue::new(v).expect("nonnegative")).or_default() += 1;
    }
    let values: Vec<f64> = tally.keys().map(|v| v.get()).collect();
    let counts: Vec<usize> = tally.values().copied().collect();
    let valleys = values
        .windows(2)
        .enumerate()
        .map(|(i, w)| Valley {
            position: 0.5 * (w[0] + w[1]),
            strength: w[1] - w[0],
            index: i,
        })
        .collect();
    DistanceHistogram {
        mode: HistogramMode::Distinct,
        peaks: (0..counts.len()).collect(),
        values,
        counts,
        overflow,
        valleys,
    }
}

fn binned_histogram(finite: &[f64], bins: usize, overflow: usize) -> DistanceHistogram {
    if finite.is_empty() {
        return DistanceHistogram {
            mode: HistogramMode::Binned,
            values: Vec::new(),
            counts: Vec::new(),
            overflow,
            peaks: Vec::new(),
            valleys: Vec::new(),
        };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in finite {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }

    let peaks = local_maxima(&counts);
    let mut valleys = Vec::new();
    for w in peaks.windows(2) {
        let (left, right) = (w[0], w[1]);
        // Leftmost minimum strictly between the two peaks.
        let v = (left + 1..right)
            .min_by_key(|&i| counts[i])
            .expect("strict maxima are never adjacent");
        valleys.push(Valley {
            position: 0.5 * (edges[v] + edges[v + 1]),
            strength: (counts[left].min(counts[right]) - counts[v]) as f64,
            index: v,
        });
    }
    DistanceHistogram {
        mode: HistogramMode::Binned,
        values: edges,
        counts,
        overflow,
        peaks,
        valleys,
    }
}

/// Strict local maxima; an end bin compares against its one neighbour and
/// a lone bin is a peak when nonempty.
fn local_maxima(counts: &[usize]) -> Vec<usize> {
    let n = counts.len();
    (0..n)
        .filter(|&i| {
            let c = counts[i];
            let left_ok = i == 0 || c > counts[i - 1];
            let right_ok = i + 1 == n || c > counts[i + 1];
            c > 0 && left_ok && right_ok
        })
        .collect()
}

/// Least `k` with `k(k−1)/2 ≥ p`, i.e. `⌈(1 + √(1 + 8p)) / 2⌉`, computed in
/// integers. `p = 0` gives 1: no between-cluster peak means one cluster.
pub fn estimate_num_clusters(p: u64) -> u64 {
    if p == 0 {
        return 1;
    }
    let disc = 1 + 8 * p;
    let s = disc.isqrt();
    if s * s == disc {
        // s is odd, so the quotient is exact.
        (1 + s) / 2
    } else {
        (1 + s) / 2 + 1
    }
}

/// Radii read off the `k` most pronounced valleys, largest radius first.
#[derive(Debug, Clone, PartialEq)]
pub struct ValleyRadii {
    pub radii: Vec<ExtValue>,
    /// Fewer than `k` valleys were available.
    pub shortfall: bool,
}

/// Picks the `k` strongest valleys (widest gaps in distinct mode, deepest
/// in binned mode; ties go to the larger radius) and returns their
/// positions in descending order.
pub fn radii_from_valleys(h: &DistanceHistogram, k: usize) -> ValleyRadii {
    let mut ranked: Vec<&Valley> = h.valleys.iter().collect();
    ranked.sort_by(|a, b| {
        b.strength
            .total_cmp(&a.strength)
            .then(b.position.total_cmp(&a.position))
    });
    ranked.truncate(k);
    let mut radii: Vec<ExtValue> = ranked
        .iter()
        .map(|v| ExtValue::new(v.position).expect("nonnegative"))
        .collect();
    radii.sort_unstable_by(|a, b| b.cmp(a));
    ValleyRadii {
        shortfall: radii.len() < k,
        radii,
    }
}
