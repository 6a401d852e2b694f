//! Sample construction over the block timeline.

use std::ops::Range;

use ndarray::{s, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;

use super::GridSeries;
use crate::{rng, Error, Result};

/// Which partition a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Partitioning and lag convention of the two forecast horizons.
///
/// `SixHour`: first 10% of blocks test, last 10% validation, middle train;
/// six lags (36 hours of history).
/// `TwentyFourHour`: first 5% validation, last 5% test, middle train;
/// three lags (72 hours of history).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitScheme {
    SixHour,
    TwentyFourHour,
}

impl SplitScheme {
    pub fn block_hours(self) -> u32 {
        match self {
            SplitScheme::SixHour => 6,
            SplitScheme::TwentyFourHour => 24,
        }
    }

    pub fn n_lags(self) -> usize {
        match self {
            SplitScheme::SixHour => 6,
            SplitScheme::TwentyFourHour => 3,
        }
    }

    /// Fraction held out for each of the two edge partitions.
    pub fn edge_fraction(self) -> f64 {
        match self {
            SplitScheme::SixHour => 0.10,
            SplitScheme::TwentyFourHour => 0.05,
        }
    }

    pub fn from_block_hours(block_hours: u32) -> Option<Self> {
        match block_hours {
            6 => Some(SplitScheme::SixHour),
            24 => Some(SplitScheme::TwentyFourHour),
            _ => None,
        }
    }

    /// Partition ranges over `n_blocks` blocks. Edge partitions get
    /// `floor(fraction · n_blocks)` blocks; the remainder is training.
    pub fn partitions(self, n_blocks: usize) -> Partitions {
        let edge = (self.edge_fraction() * n_blocks as f64).floor() as usize;
        let first = 0..edge;
        let middle = edge..n_blocks - edge;
        let last = n_blocks - edge..n_blocks;
        match self {
            SplitScheme::SixHour => Partitions {
                test: first,
                train: middle,
                validation: last,
            },
            SplitScheme::TwentyFourHour => Partitions {
                validation: first,
                train: middle,
                test: last,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitions {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl Partitions {
    pub fn range(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => self.train.clone(),
            Split::Validation => self.validation.clone(),
            Split::Test => self.test.clone(),
        }
    }

    /// The three partitions in timeline order.
    pub fn ordered(&self) -> [(Split, Range<usize>); 3] {
        let mut parts = [
            (Split::Train, self.train.clone()),
            (Split::Validation, self.validation.clone()),
            (Split::Test, self.test.clone()),
        ];
        parts.sort_by_key(|(_, r)| r.start);
        parts
    }
}

/// Per-partition probability of keeping an admissible anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRates {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SampleRates {
    pub fn all(rate: f64) -> Self {
        Self {
            train: rate,
            validation: rate,
            test: rate,
        }
    }

    fn rate(&self, split: Split) -> f64 {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub scheme: SplitScheme,
    pub sample_rates: SampleRates,
    pub seed: u64,
}

impl SplitSpec {
    /// Training rate 0.8 (six-hour) or 0.9 (24-hour); validation and test
    /// anchors are all kept.
    pub fn standard(scheme: SplitScheme, seed: u64) -> Self {
        let train = match scheme {
            SplitScheme::SixHour => 0.8,
            SplitScheme::TwentyFourHour => 0.9,
        };
        Self {
            scheme,
            sample_rates: SampleRates {
                train,
                validation: 1.0,
                test: 1.0,
            },
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("train", self.sample_rates.train),
            ("validation", self.sample_rates.validation),
            ("test", self.sample_rates.test),
        ] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Input(format!("{name} sample rate {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Lagged input sequences and labels drawn from a block timeline.
///
/// Samples reference the block array instead of copying their windows:
/// sample `i` has label block `anchors[i]` and inputs blocks
/// `anchors[i] - n_lags .. anchors[i]` in chronological order.
#[derive(Debug, Clone)]
pub struct SampleSet {
    blocks: Array3<f64>,
    anchors: Vec<usize>,
    splits: Vec<Split>,
    n_lags: usize,
    block_hours: u32,
    partitions: Partitions,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    pub fn block_hours(&self) -> u32 {
        self.block_hours
    }

    pub fn partitions(&self) -> &Partitions {
        &self.partitions
    }

    pub fn blocks(&self) -> ArrayView3<'_, f64> {
        self.blocks.view()
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        let (_, h, w) = self.blocks.dim();
        (h, w)
    }

    /// Block index of each sample's label.
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    /// Zero-based hour of the first hour of each label block.
    pub fn t_indices(&self) -> Vec<usize> {
        self.anchors.iter().map(|a| a * self.block_hours as usize).collect()
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn input(&self, i: usize) -> ArrayView3<'_, f64> {
        let a = self.anchors[i];
        self.blocks.slice(s![a - self.n_lags..a, .., ..])
    }

    pub fn label(&self, i: usize) -> ArrayView2<'_, f64> {
        self.blocks.index_axis(Axis(0), self.anchors[i])
    }

    /// Sample indices belonging to `split`, in timeline order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Block values of the whole training partition.
    pub fn train_blocks(&self) -> ArrayView3<'_, f64> {
        self.blocks.slice(s![self.partitions.train.clone(), .., ..])
    }

    /// The same samples over blocks transformed elementwise (e.g. scaled).
    pub fn map_blocks(&self, f: impl Fn(ArrayView3<f64>) -> Array3<f64>) -> SampleSet {
        let blocks = f(self.blocks.view());
        assert_eq!(blocks.dim(), self.blocks.dim(), "block transform must keep shape");
        SampleSet { blocks, ..self.clone() }
    }

    /// A set holding only the listed samples (order preserved).
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            blocks: self.blocks.clone(),
            anchors: indices.iter().map(|&i| self.anchors[i]).collect(),
            splits: indices.iter().map(|&i| self.splits[i]).collect(),
            n_lags: self.n_lags,
            block_hours: self.block_hours,
            partitions: self.partitions.clone(),
        }
    }
}

/// Builds lagged samples over a block series.
///
/// Each partition's admissible anchors (those whose `n_lags` predecessors lie
/// inside the same partition) are kept independently with the partition's
/// sample rate, one uniform draw per anchor in timeline order.
pub fn make_samples(blocks: &GridSeries, n_lags: usize, spec: &SplitSpec) -> Result<SampleSet> {
    spec.validate()?;
    if n_lags == 0 {
        return Err(Error::Input("n_lags must be positive".into()));
    }
    if blocks.t_len() <= n_lags {
        return Err(Error::InsufficientData(format!(
            "{} blocks for {n_lags} lags",
            blocks.t_len()
        )));
    }
    let partitions = spec.scheme.partitions(blocks.t_len());
    let mut rng = rng::seeded(spec.seed);
    let mut anchors = Vec::new();
    let mut splits = Vec::new();
    for (split, range) in partitions.ordered() {
        if range.len() < n_lags + 1 {
            return Err(Error::InsufficientData(format!(
                "{split:?} partition has {} blocks, needs {}",
                range.len(),
                n_lags + 1
            )));
        }
        let rate = spec.sample_rates.rate(split);
        for anchor in range.start + n_lags..range.end {
            let u: f64 = rng.random();
            if u < rate {
                anchors.push(anchor);
                splits.push(split);
            }
        }
    }
    Ok(SampleSet {
        blocks: blocks.values().to_owned(),
        anchors,
        splits,
        n_lags,
        block_hours: blocks.step_hours(),
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blocks(n: usize) -> GridSeries {
        let v = Array3::from_shape_fn((n, 2, 2), |(t, r, c)| (t + r + c) as f64);
        GridSeries::new(v, 6, 0, 1).unwrap()
    }

    #[test]
    fn rate_one_keeps_every_admissible_anchor() {
        let spec = SplitSpec {
            scheme: SplitScheme::SixHour,
            sample_rates: SampleRates::all(1.0),
            seed: 3,
        };
        let set = make_samples(&blocks(100), 2, &spec).unwrap();
        let p = set.partitions().clone();
        assert_eq!(p.test, 0..10);
        assert_eq!(p.train, 10..90);
        assert_eq!(p.validation, 90..100);
        let mut expected: Vec<usize> = (2..10).collect();
        expected.extend(12..90);
        expected.extend(92..100);
        assert_eq!(set.anchors(), expected.as_slice());
        assert_eq!(set.indices(Split::Test).len(), 8);
    }

    #[test]
    fn inputs_precede_label_in_order() {
        let spec = SplitSpec::standard(SplitScheme::SixHour, 1);
        let set = make_samples(&blocks(200), 6, &spec).unwrap();
        let i = set.len() / 2;
        let a = set.anchors()[i];
        let inp = set.input(i);
        assert_eq!(inp.len_of(Axis(0)), 6);
        for k in 0..6 {
            assert_eq!(inp[[k, 0, 0]], (a - 6 + k) as f64);
        }
        assert_eq!(set.label(i)[[0, 0]], a as f64);
        assert_eq!(set.t_indices()[i], a * 6);
    }

    #[test]
    fn paper_lag_configuration() {
        assert_eq!(
            SplitScheme::SixHour.block_hours() as usize * SplitScheme::SixHour.n_lags(),
            36
        );
        assert_eq!(
            SplitScheme::TwentyFourHour.block_hours() as usize * SplitScheme::TwentyFourHour.n_lags(),
            72
        );
    }

    #[test]
    fn seeded_selection_replays() {
        let mut spec = SplitSpec {
            scheme: SplitScheme::SixHour,
            sample_rates: SampleRates::all(0.8),
            seed: 11,
        };
        let a = make_samples(&blocks(300), 3, &spec).unwrap();
        let b = make_samples(&blocks(300), 3, &spec).unwrap();
        assert_eq!(a.t_indices(), b.t_indices());
        spec.seed = 12;
        let c = make_samples(&blocks(300), 3, &spec).unwrap();
        assert_ne!(a.t_indices(), c.t_indices());
    }

    #[test]
    fn short_partition_is_an_error() {
        let spec = SplitSpec::standard(SplitScheme::SixHour, 1);
        // 30 blocks -> 3-block edge partitions, too short for 6 lags
        assert!(matches!(
            make_samples(&blocks(30), 6, &spec),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn bad_rate_rejected() {
        let spec = SplitSpec {
            scheme: SplitScheme::SixHour,
            sample_rates: SampleRates::all(0.0),
            seed: 0,
        };
        assert!(make_samples(&blocks(100), 2, &spec).is_err());
    }

    #[test]
    fn twenty_four_hour_ordering() {
        let p = SplitScheme::TwentyFourHour.partitions(101);
        assert_eq!(p.validation, 0..5);
        assert_eq!(p.train, 5..96);
        assert_eq!(p.test, 96..101);
    }

    proptest! {
        #[test]
        fn lag_windows_stay_inside_partition(
            n in 60usize..400, lags in 1usize..5, seed in any::<u64>(), six in any::<bool>()
        ) {
            let scheme = if six { SplitScheme::SixHour } else { SplitScheme::TwentyFourHour };
            let spec = SplitSpec { scheme, sample_rates: SampleRates::all(0.7), seed };
            let b = GridSeries::new(Array3::zeros((n, 1, 1)), scheme.block_hours(), 0, 1).unwrap();
            match make_samples(&b, lags, &spec) {
                Ok(set) => {
                    let p = set.partitions().clone();
                    for i in 0..set.len() {
                        let r = p.range(set.split(i));
                        let a = set.anchors()[i];
                        prop_assert!(a >= r.start + lags && a < r.end);
                    }
                    let ord = p.ordered();
                    prop_assert_eq!(ord[0].1.end, ord[1].1.start);
                    prop_assert_eq!(ord[1].1.end, ord[2].1.start);
                    if six {
                        prop_assert_eq!(ord[0].0, Split::Test);
                        prop_assert_eq!(ord[2].0, Split::Validation);
                    } else {
                        prop_assert_eq!(ord[0].0, Split::Validation);
                        prop_assert_eq!(ord[2].0, Split::Test);
                    }
                }
                Err(e) => prop_assert!(matches!(e, Error::InsufficientData(_)), "unexpected error"),
            }
        }
    }
}
