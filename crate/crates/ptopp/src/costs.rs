//! Path cost families over traversed passage widths: the sorted width
//! vector, minimum/global/constrained passage width costs, clearance and
//! shortest-length baselines, and the weight-ratio compatibility check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tie tolerance on the length component of lexicographic comparisons.
/// Primaries are compared exactly (widths are discrete values).
pub const LEN_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("weight ratio {0} overflows the representable range for q={1}")]
    UnboundedWeight(f64, usize),
    #[error("passage width must be positive, got {0}")]
    NonPositiveWidth(f64),
}

/// Fixed-length ascending vector of traversed passage widths, padded with
/// the upper bound so that costs stay monotone before any traversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortedWidths {
    entries: Vec<f64>,
    /// Total insertions below the configured narrow threshold; tracks the
    /// count even when truncation would push entries out of the vector.
    narrow_count: u32,
    narrow_threshold: Option<f64>,
}

impl SortedWidths {
    pub fn new(q: usize, eps_bar: f64, narrow_threshold: Option<f64>) -> Self {
        Self {
            entries: vec![eps_bar; q.max(1)],
            narrow_count: 0,
            narrow_threshold,
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn q(&self) -> usize {
        self.entries.len()
    }

    pub fn narrow_count(&self) -> u32 {
        self.narrow_count
    }

    /// Smallest traversed width (or the padding bound when none).
    pub fn min_width(&self) -> f64 {
        self.entries[0]
    }

    /// Inserts in sorted order and truncates the largest entry, keeping
    /// the length fixed: the result equals sort(entries + [w])[0..q].
    pub fn insert(&mut self, w: f64) {
        if let Some(thr) = self.narrow_threshold {
            if w < thr {
                self.narrow_count += 1;
            }
        }
        let pos = self
            .entries
            .iter()
            .position(|&e| w < e)
            .unwrap_or(self.entries.len());
        if pos < self.entries.len() {
            self.entries.insert(pos, w);
            self.entries.pop();
        }
    }

    pub fn lex_cmp(&self, other: &SortedWidths) -> std::cmp::Ordering {
        for (a, b) in self.entries.iter().zip(other.entries.iter()) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.entries.len().cmp(&other.entries.len())
    }
}

/// Inserting a width, as a pure function.
pub fn insert_width(sw: &SortedWidths, w: f64) -> SortedWidths {
    let mut out = sw.clone();
    out.insert(w);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// Path length only.
    Shortest,
    /// Negative minimum traversed passage width.
    Mpw,
    /// Negative weighted sum of the q smallest traversed widths, weights
    /// a descending geometric sequence.
    Gpw { q: usize, ratio: f64 },
    /// Negative path clearance.
    MaxClearance,
    /// Length minus the unweighted width sum: order-preserving but unable
    /// to prioritize narrow passages; kept behind this explicit variant.
    LenMinusWidthSum { q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpwMode {
    /// Add `k_p` to a length-primary cost per sub-threshold crossing.
    LengthPenalty { k_p: f64 },
    /// Relabel sub-threshold widths w as -1/w before insertion.
    WidthRelabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpwSpec {
    pub eps_p: f64,
    pub mode: CpwMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub kind: CostKind,
    pub cpw: Option<CpwSpec>,
    /// Upper bound on passage widths used to pad the sorted vector;
    /// the map diagonal always qualifies.
    pub eps_bar: f64,
}

impl CostSpec {
    pub fn shortest(eps_bar: f64) -> Self {
        Self {
            kind: CostKind::Shortest,
            cpw: None,
            eps_bar,
        }
    }

    pub fn mpw(eps_bar: f64) -> Self {
        Self {
            kind: CostKind::Mpw,
            cpw: None,
            eps_bar,
        }
    }

    pub fn gpw(q: usize, ratio: f64, eps_bar: f64) -> Self {
        Self {
            kind: CostKind::Gpw { q, ratio },
            cpw: None,
            eps_bar,
        }
    }

    pub fn max_clearance(eps_bar: f64) -> Self {
        Self {
            kind: CostKind::MaxClearance,
            cpw: None,
            eps_bar,
        }
    }

    pub fn with_cpw(mut self, eps_p: f64, mode: CpwMode) -> Self {
        self.cpw = Some(CpwSpec { eps_p, mode });
        self
    }

    /// Vector dimension q; MPW is GPW with q = 1 internally.
    pub fn q(&self) -> usize {
        match self.kind {
            CostKind::Shortest | CostKind::MaxClearance | CostKind::Mpw => 1,
            CostKind::Gpw { q, .. } => q.max(1),
            CostKind::LenMinusWidthSum { q } => q.max(1),
        }
    }

    pub fn narrow_threshold(&self) -> Option<f64> {
        match self.cpw {
            Some(CpwSpec {
                eps_p,
                mode: CpwMode::LengthPenalty { .. },
            }) => Some(eps_p),
            _ => None,
        }
    }

    /// Fresh sorted-width vector for a path that has traversed nothing.
    pub fn fresh_widths(&self) -> SortedWidths {
        SortedWidths::new(self.q(), self.eps_bar, self.narrow_threshold())
    }

    /// Width transformation applied before insertion (constrained passage
    /// width): relabels sub-threshold widths as -1/w.
    pub fn apply_cpw(&self, w: f64) -> Result<f64, CostError> {
        match self.cpw {
            Some(CpwSpec {
                eps_p,
                mode: CpwMode::WidthRelabel,
            }) => {
                if w <= 0.0 {
                    return Err(CostError::NonPositiveWidth(w));
                }
                Ok(if w > eps_p { w } else { -1.0 / w })
            }
            _ => Ok(w),
        }
    }
}

/// Lexicographically compared (primary, length) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostValue {
    pub primary: f64,
    pub len: f64,
}

impl CostValue {
    pub const INFINITE: CostValue = CostValue {
        primary: f64::INFINITY,
        len: f64::INFINITY,
    };

    /// Strict lexicographic improvement: exact on the primary, tie broken
    /// by length beyond the tie tolerance.
    pub fn improves(&self, other: &CostValue) -> bool {
        if self.primary < other.primary {
            return true;
        }
        if self.primary > other.primary {
            return false;
        }
        self.len < other.len - LEN_TIE_EPS
    }

    /// Total order for priority queues.
    pub fn lex_cmp(&self, other: &CostValue) -> std::cmp::Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.len.total_cmp(&other.len))
    }
}

/// Descending geometric weights w_i / w_{i+1} = ratio, ending at 1.
pub fn geometric_weights(q: usize, ratio: f64) -> Result<Vec<f64>, CostError> {
    let mut w = vec![1.0; q];
    for i in (0..q.saturating_sub(1)).rev() {
        w[i] = w[i + 1] * ratio;
        if !w[i].is_finite() {
            return Err(CostError::UnboundedWeight(ratio, q));
        }
    }
    Ok(w)
}

/// Path cost under the configured family. The clearance argument is only
/// read by the max-clearance family.
pub fn path_cost(
    spec: &CostSpec,
    sw: &SortedWidths,
    len: f64,
    clearance: f64,
) -> Result<CostValue, CostError> {
    let primary = match spec.kind {
        CostKind::Shortest => {
            let penalty = match spec.cpw {
                Some(CpwSpec {
                    mode: CpwMode::LengthPenalty { k_p },
                    ..
                }) => k_p * sw.narrow_count() as f64,
                _ => 0.0,
            };
            len + penalty
        }
        CostKind::Mpw => -sw.min_width(),
        CostKind::Gpw { q, ratio } => {
            let w = geometric_weights(q.max(1), ratio)?;
            -w.iter()
                .zip(sw.entries().iter())
                .map(|(wi, pi)| wi * pi)
                .sum::<f64>()
        }
        CostKind::MaxClearance => -clearance,
        CostKind::LenMinusWidthSum { .. } => len - sw.entries().iter().sum::<f64>(),
    };
    Ok(CostValue { primary, len })
}

/// Sufficient weight-ratio bound for lexicographic order preservation:
/// ratio > max(dp)/min(dp) + q - 2 over distinct width differences.
/// Degenerate width sets (all equal) pass for any ratio.
pub fn validate_weights(q: usize, ratio: f64, width_set: &[f64]) -> Result<bool, CostError> {
    geometric_weights(q.max(1), ratio)?;
    let mut widths: Vec<f64> = width_set.to_vec();
    widths.sort_by(f64::total_cmp);
    widths.dedup();
    if widths.len() < 2 {
        return Ok(true);
    }
    let mut min_dp = f64::INFINITY;
    let mut max_dp: f64 = 0.0;
    for i in 0..widths.len() {
        for j in (i + 1)..widths.len() {
            let dp = (widths[j] - widths[i]).abs();
            if dp > 0.0 {
                min_dp = min_dp.min(dp);
                max_dp = max_dp.max(dp);
            }
        }
    }
    let bound = max_dp / min_dp + q.max(2) as f64 - 2.0;
    Ok(ratio > bound)
}

/// Length of a polyline; the supremum over partitions is attained exactly.
pub fn polyline_length<P: Copy, F: Fn(P, P) -> f64>(points: &[P], dist: F) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// The non-compatible trade-off cost Len - w_p * f_p, kept for the
/// order-preservation counterexample and demos; not a planner cost.
pub fn tradeoff_cost(len: f64, f_p: f64, w_p: f64) -> f64 {
    len - w_p * f_p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const EPS_BAR: f64 = 1166.0;

    fn sw_from(widths: &[f64], q: usize) -> SortedWidths {
        let mut sw = SortedWidths::new(q, EPS_BAR, None);
        for &w in widths {
            sw.insert(w);
        }
        sw
    }

    #[test]
    fn insert_into_fresh_vector() {
        let mut sw = SortedWidths::new(3, EPS_BAR, None);
        sw.insert(5.0);
        assert_eq!(sw.entries(), &[5.0, EPS_BAR, EPS_BAR]);
    }

    #[test]
    fn insert_truncates_largest() {
        let mut sw = sw_from(&[3.0, 5.0, 7.0], 3);
        sw.insert(4.0);
        assert_eq!(sw.entries(), &[3.0, 4.0, 5.0]);
        // no-op when w is not smaller than the current maximum
        sw.insert(9.0);
        assert_eq!(sw.entries(), &[3.0, 4.0, 5.0]);
    }

    proptest! {
        #[test]
        fn insert_matches_sort_truncate_oracle(
            widths in proptest::collection::vec(0.1f64..2000.0, 0..12),
            q in 1usize..5,
        ) {
            let mut sw = SortedWidths::new(q, EPS_BAR, None);
            let mut all = vec![EPS_BAR; q];
            for &w in &widths {
                sw.insert(w);
                all.push(w);
            }
            all.sort_by(f64::total_cmp);
            prop_assert_eq!(sw.entries(), &all[..q]);
            // ascending order and fixed length hold throughout
            prop_assert!(sw.entries().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn mpw_cost_examples() {
        let spec = CostSpec::mpw(EPS_BAR);
        let sw = sw_from(&[30.0, 50.0], 1);
        let c = path_cost(&spec, &sw, 100.0, 0.0).unwrap();
        assert_eq!(c.primary, -30.0);
        assert_eq!(c.len, 100.0);
        // nothing traversed: the padding bound
        let empty = spec.fresh_widths();
        assert_eq!(path_cost(&spec, &empty, 7.0, 0.0).unwrap().primary, -EPS_BAR);
    }

    #[test]
    fn gpw_fixes_equal_sum_pathology() {
        let spec = CostSpec::gpw(2, 100.0, EPS_BAR);
        let a = sw_from(&[1.0, 9.0], 2);
        let b = sw_from(&[5.0, 5.0], 2);
        let ca = path_cost(&spec, &a, 0.0, 0.0).unwrap();
        let cb = path_cost(&spec, &b, 0.0, 0.0).unwrap();
        assert_eq!(ca.primary, -109.0);
        assert_eq!(cb.primary, -505.0);
        // the wider-narrowest path wins even though the sums are equal
        assert!(cb.primary < ca.primary);
    }

    #[test]
    fn cpw_relabel_examples() {
        let spec = CostSpec::mpw(EPS_BAR).with_cpw(60.0, CpwMode::WidthRelabel);
        assert_eq!(spec.apply_cpw(80.0).unwrap(), 80.0);
        assert_eq!(spec.apply_cpw(40.0).unwrap(), -0.025);
        assert_eq!(
            spec.apply_cpw(0.0),
            Err(CostError::NonPositiveWidth(0.0))
        );
    }

    #[test]
    fn cpw_length_penalty_counts_crossings() {
        let spec = CostSpec::shortest(EPS_BAR).with_cpw(
            60.0,
            CpwMode::LengthPenalty { k_p: 1e6 },
        );
        let mut sw = spec.fresh_widths();
        sw.insert(40.0);
        sw.insert(55.0);
        sw.insert(80.0);
        let c = path_cost(&spec, &sw, 500.0, 0.0).unwrap();
        assert_eq!(c.primary, 500.0 + 2e6);
    }

    #[test]
    fn validate_weights_examples() {
        // widths {10,20,30}: max dp / min dp = 2, q=3 needs ratio > 3
        assert!(validate_weights(3, 100.0, &[10.0, 20.0, 30.0]).unwrap());
        assert!(!validate_weights(3, 2.9, &[10.0, 20.0, 30.0]).unwrap());
        assert!(validate_weights(3, 3.1, &[10.0, 20.0, 30.0]).unwrap());
        // single width passes for any ratio
        assert!(validate_weights(3, 1.5, &[42.0, 42.0]).unwrap());
        assert!(matches!(
            validate_weights(500, 1e300, &[1.0, 2.0]),
            Err(CostError::UnboundedWeight(..))
        ));
    }

    #[test]
    fn lexicographic_cost_value() {
        let a = CostValue { primary: -30.0, len: 10.0 };
        let b = CostValue { primary: -30.0, len: 10.0 + 1e-12 };
        let c = CostValue { primary: -30.0, len: 11.0 };
        let d = CostValue { primary: -29.0, len: 1.0 };
        assert!(!a.improves(&b)); // inside the length tie tolerance
        assert!(a.improves(&c));
        assert!(a.improves(&d));
        assert!(c.improves(&d));
        assert_eq!(a.lex_cmp(&c), std::cmp::Ordering::Less);
    }

    /// Exhaustive q<=3 order-preservation check over a small width set
    /// with a ratio passing the bound; the acceptance suite scales this up.
    #[test]
    fn order_preservation_small_exhaustive() {
        let widths = [10.0, 25.0, 40.0, 70.0];
        let q = 3;
        let eps_bar = 70.0; // equals the maximum width, per the bound
        let bound_ratio = 8.0; // max dp / min dp = 60/15 = 4, + q - 2 = 5
        assert!(validate_weights(q, bound_ratio, &widths).unwrap());
        let spec = CostSpec {
            kind: CostKind::Gpw { q, ratio: bound_ratio },
            cpw: None,
            eps_bar,
        };
        let vectors = enumerate_vectors(&widths, q, eps_bar);
        for a in &vectors {
            for b in &vectors {
                let ca = path_cost(&spec, a, 0.0, 0.0).unwrap().primary;
                let cb = path_cost(&spec, b, 0.0, 0.0).unwrap().primary;
                for &w in &widths {
                    let ca2 = path_cost(&spec, &insert_width(a, w), 0.0, 0.0)
                        .unwrap()
                        .primary;
                    let cb2 = path_cost(&spec, &insert_width(b, w), 0.0, 0.0)
                        .unwrap()
                        .primary;
                    if ca >= cb {
                        assert!(
                            ca2 >= cb2,
                            "order broken: {:?} vs {:?} insert {w}",
                            a.entries(),
                            b.entries()
                        );
                    }
                }
            }
        }
        // lexicographic transfer: lex-smaller vector has strictly larger cost
        for a in &vectors {
            for b in &vectors {
                if a.lex_cmp(b) == std::cmp::Ordering::Less {
                    let ca = path_cost(&spec, a, 0.0, 0.0).unwrap().primary;
                    let cb = path_cost(&spec, b, 0.0, 0.0).unwrap().primary;
                    assert!(ca > cb, "{:?} vs {:?}", a.entries(), b.entries());
                }
            }
        }
    }

    fn enumerate_vectors(widths: &[f64], q: usize, eps_bar: f64) -> Vec<SortedWidths> {
        // all multisets of size <= q from the width set, padded
        let mut out = vec![SortedWidths::new(q, eps_bar, None)];
        let mut frontier = vec![Vec::<f64>::new()];
        for _ in 0..q {
            let mut next = Vec::new();
            for partial in &frontier {
                for &w in widths {
                    if partial.last().map_or(true, |&l| w >= l) {
                        let mut ext = partial.clone();
                        ext.push(w);
                        let mut sw = SortedWidths::new(q, eps_bar, None);
                        for &x in &ext {
                            sw.insert(x);
                        }
                        out.push(sw);
                        next.push(ext);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    #[test]
    fn monotonicity_under_concatenation() {
        let mut rng = StdRng::seed_from_u64(12);
        let specs = [
            CostSpec::mpw(EPS_BAR),
            CostSpec::gpw(3, 100.0, EPS_BAR),
            CostSpec::shortest(EPS_BAR),
        ];
        for spec in &specs {
            for _ in 0..2000 {
                let mut sw = spec.fresh_widths();
                let mut len = 0.0;
                let mut last = path_cost(spec, &sw, len, 0.0).unwrap();
                for _ in 0..8 {
                    if rng.gen_bool(0.7) {
                        sw.insert(rng.gen_range(1.0..EPS_BAR));
                    }
                    len += rng.gen_range(0.0..50.0);
                    let now = path_cost(spec, &sw, len, 0.0).unwrap();
                    assert!(
                        now.primary >= last.primary - 1e-9,
                        "{spec:?} cost decreased"
                    );
                    last = now;
                }
            }
        }
    }

    #[test]
    fn polyline_length_examples() {
        let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert_eq!(polyline_length(&[(0.0, 0.0)], d), 0.0);
        let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
        assert!((polyline_length(&square, d) - 4.0).abs() < 1e-12);
    }
}
