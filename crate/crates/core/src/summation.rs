//! Running sums with an optional compensation term.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationMode {
    /// Left-to-right accumulation.
    #[default]
    Plain,
    /// Neumaier's variant of Kahan summation. Unlike classic Kahan it stays
    /// exact-ish when a new term dwarfs the running sum, which is the normal
    /// situation for explosive paths.
    Compensated,
}

/// Accumulator honouring a [`SummationMode`].
#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    mode: SummationMode,
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new(mode: SummationMode) -> Self {
        Self {
            mode,
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        match self.mode {
            SummationMode::Plain => self.sum += x,
            SummationMode::Compensated => {
                let t = self.sum + x;
                if self.sum.abs() >= x.abs() {
                    self.comp += (self.sum - t) + x;
                } else {
                    self.comp += (x - t) + self.sum;
                }
                self.sum = t;
            }
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum_with<I: IntoIterator<Item = f64>>(mode: SummationMode, iter: I) -> f64 {
    let mut acc = Accumulator::new(mode);
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_recovers_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum_with(SummationMode::Plain, xs), 0.0);
        assert_eq!(sum_with(SummationMode::Compensated, xs), 2.0);
    }

    #[test]
    fn modes_agree_on_exact_sums() {
        let xs = (1..=100).map(f64::from);
        assert_eq!(sum_with(SummationMode::Plain, xs.clone()), 5050.0);
        assert_eq!(sum_with(SummationMode::Compensated, xs), 5050.0);
    }
}
