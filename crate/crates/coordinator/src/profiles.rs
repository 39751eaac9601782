use std::collections::{BTreeMap, BTreeSet};

use tracemap_core::Prefix;

use crate::Mobility;

/// Reliability over the trailing windows ending at `current_day`:
/// daily-reliable means active on at least 4 of the trailing 7 days,
/// weekly-reliable at least 3 of the trailing 4 weeks.
pub fn classify_reliability(active_days: &BTreeSet<u64>, current_day: u64) -> (bool, bool) {
    let daily = (0..7u64)
        .filter(|d| current_day >= *d && active_days.contains(&(current_day - d)))
        .count()
        >= 4;
    let current_week = current_day / 7;
    let weekly = (0..4u64)
        .filter(|w| {
            current_week >= *w && active_days.iter().any(|d| d / 7 == current_week - w)
        })
        .count()
        >= 3;
    (daily, weekly)
}

/// Mobility class from the per-/24 record tally: one prefix is
/// stationary, two is bi-homed, more is mobile. Keeps the top two
/// prefixes by count, ties broken toward the lower prefix.
pub fn classify_mobility(prefix_counts: &BTreeMap<Prefix, u64>) -> (Mobility, Vec<(Prefix, u64)>) {
    let mobility = match prefix_counts.len() {
        0 | 1 => Mobility::Stationary,
        2 => Mobility::BiHomed,
        _ => Mobility::Mobile,
    };
    let mut by_count: Vec<(Prefix, u64)> =
        prefix_counts.iter().map(|(p, c)| (*p, *c)).collect();
    by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    by_count.truncate(2);
    (mobility, by_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tracemap_core::Ip;

    fn p24(n: u32) -> Prefix {
        Prefix::containing(Ip(n << 8), 24)
    }

    #[test]
    fn active_every_day() {
        let days: BTreeSet<u64> = (72..100).collect();
        assert_eq!(classify_reliability(&days, 99), (true, true));
    }

    #[test]
    fn three_of_seven_but_every_week() {
        // active exactly once a week for four weeks, plus twice in the
        // last week: 3 active days within the trailing 7, one per week
        let days: BTreeSet<u64> = BTreeSet::from([0, 7, 14, 21, 25, 27]);
        let (daily, weekly) = classify_reliability(&days, 27);
        assert!(!daily);
        assert!(weekly);
    }

    #[test]
    fn reliability_matches_window_count_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let current = rng.gen_range(0..60u64);
            let days: BTreeSet<u64> = (0..=current).filter(|_| rng.gen_bool(0.4)).collect();
            let (daily, weekly) = classify_reliability(&days, current);
            let mut day_hits = 0;
            for d in 0..7 {
                if current >= d && days.contains(&(current - d)) {
                    day_hits += 1;
                }
            }
            let mut week_hits = 0;
            for w in 0..4 {
                if current / 7 >= w {
                    let week = current / 7 - w;
                    if days.iter().any(|d| d / 7 == week) {
                        week_hits += 1;
                    }
                }
            }
            assert_eq!(daily, day_hits >= 4);
            assert_eq!(weekly, week_hits >= 3);
        }
    }

    #[test]
    fn mobility_classes() {
        let one = BTreeMap::from([(p24(1), 10)]);
        assert_eq!(classify_mobility(&one).0, Mobility::Stationary);

        let two = BTreeMap::from([(p24(1), 60), (p24(2), 40)]);
        let (m, top) = classify_mobility(&two);
        assert_eq!(m, Mobility::BiHomed);
        assert_eq!(top, vec![(p24(1), 60), (p24(2), 40)]);

        let five = BTreeMap::from([
            (p24(1), 50),
            (p24(2), 30),
            (p24(3), 10),
            (p24(4), 5),
            (p24(5), 5),
        ]);
        let (m, top) = classify_mobility(&five);
        assert_eq!(m, Mobility::Mobile);
        assert_eq!(top, vec![(p24(1), 50), (p24(2), 30)]);
    }

    #[test]
    fn mobility_tie_prefers_lower_prefix() {
        let tally = BTreeMap::from([(p24(9), 10), (p24(2), 10), (p24(5), 10)]);
        let (_, top) = classify_mobility(&tally);
        assert_eq!(top, vec![(p24(2), 10), (p24(5), 10)]);
    }
}
