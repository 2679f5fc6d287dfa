//! Reliability ranking, the piecewise-linear weight model and the ORBGRAND
//! pattern schedule.
//!
//! A pattern is a set of rank indices (0-based; rank 0 is the least reliable
//! position). Its weight is the sum of the model weights of its members.
//! [`PatternGenerator`] emits every pattern exactly once in nondecreasing
//! weight, ties broken lexicographically on the sorted rank indices.

use crate::{Error, Result};

/// Permutation that sorts a reliability vector ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityRanking {
    perm: Vec<usize>,
    values: Vec<f64>,
}

impl ReliabilityRanking {
    /// `perm()[r]` is the original index of the entry with rank `r`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Reliabilities in rank order (nondecreasing).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Stable ascending sort of nonnegative reliabilities.
pub fn rank(values: &[f64]) -> Result<ReliabilityRanking> {
    if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidReliability { index });
    }
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values = perm.iter().map(|&i| values[i]).collect();
    Ok(ReliabilityRanking { perm, values })
}

/// One least-squares line of the weight model, in 1-based rank units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub slope: f64,
    pub intercept: f64,
}

/// Integer pattern weights per rank.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightModel {
    breakpoints: Vec<usize>,
    segments: Vec<Segment>,
    step: Option<f64>,
    weights: Vec<u64>,
}

impl WeightModel {
    /// All weights 1: patterns come out in flip-count order.
    pub fn uniform(len: usize) -> WeightModel {
        WeightModel {
            breakpoints: Vec::new(),
            segments: Vec::new(),
            step: None,
            weights: vec![1; len],
        }
    }

    /// `W(r) = r` (1-based): basic ORBGRAND logistic weights.
    pub fn identity(len: usize) -> WeightModel {
        WeightModel {
            breakpoints: Vec::new(),
            segments: Vec::new(),
            step: None,
            weights: (1..=len as u64).collect(),
        }
    }

    /// Explicit weights; they must be nondecreasing and at least 1.
    pub fn from_weights(weights: Vec<u64>) -> Result<WeightModel> {
        if weights.iter().any(|&w| w == 0) {
            return Err(Error::InvalidWeights("weights must be at least 1".into()));
        }
        if weights.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidWeights("weights must be nondecreasing".into()));
        }
        Ok(WeightModel {
            breakpoints: Vec::new(),
            segments: Vec::new(),
            step: None,
            weights,
        })
    }

    /// Weight of 0-based rank `r`.
    pub fn weight(&self, r: usize) -> u64 {
        self.weights[r]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Segment boundaries as 1-based ranks (`lines + 1` of them) for a fitted
    /// model, empty otherwise.
    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Reliability units per unit of weight, if the model was fitted with a
    /// positive slope.
    pub fn step(&self) -> Option<f64> {
        self.step
    }
}

/// Fits `lines` least-squares segments to the rank-ordered reliabilities and
/// quantizes the fitted curve to integer weights.
///
/// Breakpoints sit at equally spaced ranks `1 + round(l (N - 1) / lines)`;
/// neighbouring segments share their boundary sample. The quantization step
/// is the slope of the first segment (or of the first segment with a positive
/// slope), and `W(r) = max(1, round(fit(r) / step))`, made nondecreasing by a
/// running maximum. With no positive slope anywhere every weight is 1.
pub fn fit_weight_model(ranking: &ReliabilityRanking, lines: usize) -> Result<WeightModel> {
    let n = ranking.len();
    if lines == 0 || n < lines + 1 {
        return Err(Error::TooFewSamples {
            needed: lines.max(1) + 1,
            got: n,
        });
    }
    let values = ranking.values();
    let breakpoints: Vec<usize> = (0..=lines)
        .map(|l| 1 + ((l * (n - 1)) as f64 / lines as f64).round() as usize)
        .collect();
    let segments: Vec<Segment> = breakpoints
        .windows(2)
        .map(|b| least_squares(values, b[0], b[1]))
        .collect();

    let magnitude = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tiny = f64::EPSILON * magnitude.max(f64::MIN_POSITIVE) * n as f64;
    let step = segments.iter().map(|s| s.slope).find(|&s| s > tiny);

    let mut weights = Vec::with_capacity(n);
    let mut floor = 1u64;
    let mut seg = 0;
    for r in 1..=n {
        while r > breakpoints[seg + 1] {
            seg += 1;
        }
        let w = match step {
            Some(step) => {
                let s = segments[seg];
                let q = ((s.intercept + s.slope * r as f64) / step).round();
                q.clamp(1.0, 1e12) as u64
            }
            None => 1,
        };
        floor = floor.max(w);
        weights.push(floor);
    }

    Ok(WeightModel {
        breakpoints,
        segments,
        step,
        weights,
    })
}

/// Least-squares line through `(r, values[r - 1])` for `r` in `lo..=hi`.
fn least_squares(values: &[f64], lo: usize, hi: usize) -> Segment {
    let count = (hi - lo + 1) as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for r in lo..=hi {
        sx += r as f64;
        sy += values[r - 1];
    }
    let (mx, my) = (sx / count, sy / count);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for r in lo..=hi {
        let dx = r as f64 - mx;
        sxx += dx * dx;
        sxy += dx * (values[r - 1] - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Segment {
        slope,
        intercept: my - slope * mx,
    }
}

/// A set of rank indices with its total weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub indices: Vec<usize>,
    pub weight: u64,
}

/// Anything that yields patterns (sorted rank-index sets) one at a time.
pub trait PatternSource {
    fn next_pattern(&mut self) -> Option<&[usize]>;
}

/// ORBGRAND schedule: all subsets of `0..N` in nondecreasing total weight,
/// lexicographic within a weight.
///
/// For each target weight a depth-first search builds the subsets whose
/// weights sum exactly to the target, choosing members in increasing rank
/// order; a branch is cut as soon as the remaining weight cannot be matched by
/// the ranks still available. The search records the smallest sum overshooting
/// the target, which is the next weight that has any pattern, so unreachable
/// weights are never visited.
#[derive(Clone, Debug)]
pub struct PatternGenerator {
    weights: Vec<u64>,
    suffix: Vec<u64>,
    max_weight: u64,
    max_count: u64,
    emitted: u64,
    target: u64,
    next_target: u64,
    stack: Vec<usize>,
    sum: u64,
    phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Empty,
    Fresh,
    Resume,
    Done,
}

impl PatternGenerator {
    pub fn new(model: &WeightModel) -> PatternGenerator {
        Self::from_weights(model.weights().to_vec())
    }

    fn from_weights(weights: Vec<u64>) -> PatternGenerator {
        let mut suffix = vec![0u64; weights.len() + 1];
        for j in (0..weights.len()).rev() {
            suffix[j] = suffix[j + 1].saturating_add(weights[j]);
        }
        PatternGenerator {
            weights,
            suffix,
            max_weight: u64::MAX,
            max_count: u64::MAX,
            emitted: 0,
            target: 0,
            next_target: u64::MAX,
            stack: Vec::new(),
            sum: 0,
            phase: Phase::Empty,
        }
    }

    /// Stops after the last pattern whose weight is at most `bound`.
    pub fn with_max_weight(mut self, bound: u64) -> Self {
        self.max_weight = bound;
        self
    }

    /// Stops after `count` patterns.
    pub fn with_max_count(mut self, count: u64) -> Self {
        self.max_count = count;
        self
    }

    /// Number of positions patterns are drawn from.
    pub fn positions(&self) -> usize {
        self.weights.len()
    }

    /// Weight of the most recently emitted pattern.
    pub fn current_weight(&self) -> u64 {
        self.target
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn note_overshoot(&mut self, total: u64) {
        if total < self.next_target {
            self.next_target = total;
        }
    }

    /// Continues the depth-first search at candidate rank `j` of the current
    /// depth. Returns true with a complete pattern on the stack.
    fn search(&mut self, mut j: usize) -> bool {
        let n = self.weights.len();
        loop {
            if j < n {
                let rem = self.target - self.sum;
                let wj = self.weights[j];
                if wj > rem {
                    // Weights are nondecreasing: nothing further fits here.
                    self.note_overshoot(self.sum + wj);
                    j = n;
                    continue;
                }
                let left = rem - wj;
                if left == 0 {
                    if j + 1 < n {
                        self.note_overshoot(self.target + self.weights[j + 1]);
                    }
                    self.stack.push(j);
                    self.sum += wj;
                    return true;
                }
                if j + 1 < n {
                    if self.weights[j + 1] > left {
                        self.note_overshoot(self.sum + wj + self.weights[j + 1]);
                    } else if left <= self.suffix[j + 1] {
                        self.stack.push(j);
                        self.sum += wj;
                    }
                }
                j += 1;
                continue;
            }
            match self.stack.pop() {
                None => return false,
                Some(x) => {
                    self.sum -= self.weights[x];
                    j = x + 1;
                }
            }
        }
    }

    fn advance(&mut self) -> bool {
        loop {
            match self.phase {
                Phase::Done => return false,
                Phase::Empty => {
                    self.phase = if self.weights.is_empty() {
                        Phase::Done
                    } else {
                        self.next_target = self.weights[0];
                        Phase::Fresh
                    };
                    self.target = 0;
                    self.stack.clear();
                    return true;
                }
                Phase::Resume => {
                    let last = self.stack.pop().expect("resume after a pattern");
                    self.sum -= self.weights[last];
                    if self.search(last + 1) {
                        return true;
                    }
                    self.phase = Phase::Fresh;
                }
                Phase::Fresh => {
                    if self.next_target == u64::MAX || self.next_target > self.max_weight {
                        self.phase = Phase::Done;
                        return false;
                    }
                    self.target = self.next_target;
                    self.next_target = u64::MAX;
                    self.stack.clear();
                    self.sum = 0;
                    self.phase = Phase::Resume;
                    if self.search(0) {
                        return true;
                    }
                    self.phase = Phase::Fresh;
                }
            }
        }
    }
}

impl PatternSource for PatternGenerator {
    fn next_pattern(&mut self) -> Option<&[usize]> {
        if self.emitted >= self.max_count {
            self.phase = Phase::Done;
            return None;
        }
        if self.advance() {
            self.emitted += 1;
            Some(&self.stack)
        } else {
            None
        }
    }
}

impl Iterator for PatternGenerator {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        let indices = self.next_pattern()?.to_vec();
        Some(Pattern {
            indices,
            weight: self.target,
        })
    }
}

/// A precomputed schedule over real-valued per-rank costs: every subset of at
/// most `max_size` ranks (and total cost at most `max_cost`) sorted by total
/// cost, ties lexicographic. Exact but exponential; meant for small instances.
#[derive(Clone, Debug)]
pub struct SortedSchedule {
    patterns: Vec<(f64, Vec<usize>)>,
    next: usize,
}

impl SortedSchedule {
    /// Refuses to materialize more than `limit` patterns.
    pub fn new(costs: &[f64], max_size: usize, max_cost: f64, limit: usize) -> Result<Self> {
        let mut patterns = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        fn walk(
            costs: &[f64],
            start: usize,
            sum: f64,
            max_size: usize,
            max_cost: f64,
            limit: usize,
            stack: &mut Vec<usize>,
            out: &mut Vec<(f64, Vec<usize>)>,
        ) -> Result<()> {
            if out.len() >= limit {
                return Err(Error::ScheduleTooLarge(format!("more than {limit} patterns")));
            }
            out.push((sum, stack.clone()));
            if stack.len() == max_size {
                return Ok(());
            }
            for j in start..costs.len() {
                let s = sum + costs[j];
                if s > max_cost {
                    continue;
                }
                stack.push(j);
                walk(costs, j + 1, s, max_size, max_cost, limit, stack, out)?;
                stack.pop();
            }
            Ok(())
        }
        walk(costs, 0, 0.0, max_size, max_cost, limit, &mut stack, &mut patterns)?;
        patterns.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        Ok(SortedSchedule { patterns, next: 0 })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

impl PatternSource for SortedSchedule {
    fn next_pattern(&mut self) -> Option<&[usize]> {
        let p = self.patterns.get(self.next)?;
        self.next += 1;
        Some(&p.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(model: &WeightModel) -> Vec<Vec<usize>> {
        PatternGenerator::new(model).map(|p| p.indices).collect()
    }

    #[test]
    fn rank_small() {
        let r = rank(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.perm(), &[1, 2, 0]);
        assert_eq!(r.values(), &[1.0, 2.0, 3.0]);
        let sorted = rank(&[0.0, 0.5, 0.5, 2.0]).unwrap();
        assert_eq!(sorted.perm(), &[0, 1, 2, 3]);
    }

    #[test]
    fn rank_rejects_bad_values() {
        assert!(matches!(
            rank(&[1.0, f64::NAN]),
            Err(Error::InvalidReliability { index: 1 })
        ));
        assert!(rank(&[-1.0]).is_err());
        assert!(rank(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn three_positions_identity() {
        let got = collect(&WeightModel::identity(3));
        let want: Vec<Vec<usize>> = vec![
            vec![],
            vec![0],
            vec![1],
            vec![0, 1],
            vec![2],
            vec![0, 2],
            vec![1, 2],
            vec![0, 1, 2],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn single_position() {
        assert_eq!(collect(&WeightModel::identity(1)), vec![vec![], vec![0]]);
        assert_eq!(collect(&WeightModel::identity(0)), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn uniform_is_flip_count_order() {
        let got = collect(&WeightModel::uniform(3));
        assert_eq!(
            got,
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2]
            ]
        );
    }

    #[test]
    fn gaps_in_weights_are_skipped() {
        let model = WeightModel::from_weights(vec![5, 5, 100]).unwrap();
        let got: Vec<(Vec<usize>, u64)> = PatternGenerator::new(&model)
            .map(|p| (p.indices, p.weight))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![], 0),
                (vec![0], 5),
                (vec![1], 5),
                (vec![0, 1], 10),
                (vec![2], 100),
                (vec![0, 2], 105),
                (vec![1, 2], 105),
                (vec![0, 1, 2], 110),
            ]
        );
    }

    #[test]
    fn bounds() {
        let g = PatternGenerator::new(&WeightModel::identity(10)).with_max_weight(3);
        assert_eq!(g.count(), 5);
        let g = PatternGenerator::new(&WeightModel::identity(10)).with_max_count(4);
        assert_eq!(g.count(), 4);
    }

    #[test]
    fn from_weights_validation() {
        assert!(WeightModel::from_weights(vec![1, 0]).is_err());
        assert!(WeightModel::from_weights(vec![2, 1]).is_err());
        assert!(WeightModel::from_weights(vec![1, 1, 4]).is_ok());
    }

    #[test]
    fn fit_linear_recovers_identity() {
        for lines in 1..=4 {
            let values: Vec<f64> = (1..=40).map(|r| 0.37 * r as f64).collect();
            let m = fit_weight_model(&rank(&values).unwrap(), lines).unwrap();
            assert_eq!(m.weights(), (1..=40).collect::<Vec<u64>>().as_slice());
            assert_eq!(m.breakpoints().len(), lines + 1);
        }
    }

    #[test]
    fn fit_constant_values() {
        let m = fit_weight_model(&rank(&[2.5; 12]).unwrap(), 3).unwrap();
        assert!(m.weights().iter().all(|&w| w == m.weights()[0] && w >= 1));
        let m = fit_weight_model(&rank(&[0.0; 12]).unwrap(), 3).unwrap();
        assert!(m.weights().iter().all(|&w| w == 1));
    }

    #[test]
    fn fit_needs_enough_samples() {
        let r = rank(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            fit_weight_model(&r, 3),
            Err(Error::TooFewSamples { needed: 4, got: 3 })
        ));
        assert!(fit_weight_model(&r, 0).is_err());
        assert!(fit_weight_model(&r, 2).is_ok());
    }

    #[test]
    fn sorted_schedule_orders_by_cost() {
        let mut s = SortedSchedule::new(&[0.1, 0.2, 0.25], 3, f64::INFINITY, 100).unwrap();
        let mut got = Vec::new();
        while let Some(p) = s.next_pattern() {
            got.push(p.to_vec());
        }
        assert_eq!(
            got,
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2]
            ]
        );
        assert!(SortedSchedule::new(&[0.1; 20], 20, f64::INFINITY, 1000).is_err());
    }
}
