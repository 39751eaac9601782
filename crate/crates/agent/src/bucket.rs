use tracemap_core::Timestamp;
use tracemap_penny::VirtualClock;

/// Token bucket over integer sub-token units (60 subunits per token), so
/// refill at `rate` tokens per minute is exactly `rate` subunits per
/// second with no rounding drift. Acquiring blocks on the virtual clock.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    capacity_sub: u64,
    tokens_sub: u64,
    refill_sub_per_sec: u64,
    last_update: Timestamp,
}

const SUB_PER_TOKEN: u64 = 60;

impl TokenBucket {
    pub fn new(capacity_tokens: u32, rate_per_min: u32, now: Timestamp) -> Self {
        assert!(capacity_tokens >= 1 && rate_per_min >= 1);
        TokenBucket {
            capacity_sub: capacity_tokens as u64 * SUB_PER_TOKEN,
            tokens_sub: capacity_tokens as u64 * SUB_PER_TOKEN,
            refill_sub_per_sec: rate_per_min as u64,
            last_update: now,
        }
    }

    /// Politeness bucket: capacity one token. Burstless, so any
    /// half-open sliding minute sees at most `rate_per_min` acquisitions.
    pub fn per_minute(rate_per_min: u32, now: Timestamp) -> Self {
        TokenBucket::new(1, rate_per_min, now)
    }

    fn refill(&mut self, now: Timestamp) {
        debug_assert!(now >= self.last_update);
        let gained = (now - self.last_update) * self.refill_sub_per_sec;
        self.tokens_sub = (self.tokens_sub + gained).min(self.capacity_sub);
        self.last_update = now;
    }

    pub fn tokens(&self) -> f64 {
        self.tokens_sub as f64 / SUB_PER_TOKEN as f64
    }

    pub fn capacity(&self) -> f64 {
        self.capacity_sub as f64 / SUB_PER_TOKEN as f64
    }

    /// Take one token, advancing the clock to the earliest instant the
    /// bucket allows it.
    pub fn acquire(&mut self, clock: &mut VirtualClock) {
        self.refill(clock.now());
        if self.tokens_sub < SUB_PER_TOKEN {
            let need = SUB_PER_TOKEN - self.tokens_sub;
            let wait = need.div_ceil(self.refill_sub_per_sec);
            clock.advance(wait);
            self.refill(clock.now());
        }
        debug_assert!(self.tokens_sub >= SUB_PER_TOKEN);
        self.tokens_sub -= SUB_PER_TOKEN;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_times(rate: u32, count: usize, start: Timestamp) -> Vec<Timestamp> {
        let mut clock = VirtualClock::new(start, 0);
        let mut bucket = TokenBucket::per_minute(rate, start);
        (0..count)
            .map(|_| {
                bucket.acquire(&mut clock);
                clock.now()
            })
            .collect()
    }

    fn max_in_any_minute(times: &[Timestamp]) -> usize {
        // half-open windows [t, t+60)
        times
            .iter()
            .map(|&t| times.iter().filter(|&&u| u >= t && u < t + 60).count())
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn divisor_rate_spaces_exactly() {
        let times = probe_times(10, 100, 0);
        assert_eq!(times[0], 0);
        assert_eq!(times[1], 6);
        assert_eq!(times.last().copied().unwrap(), 99 * 6);
        assert_eq!(max_in_any_minute(&times), 10);
    }

    #[test]
    fn awkward_rates_still_respect_the_window() {
        for rate in [1u32, 3, 7, 11, 13, 59, 61] {
            let times = probe_times(rate, 300, 17);
            assert!(
                max_in_any_minute(&times) <= rate as usize,
                "rate {rate} violated"
            );
        }
    }

    #[test]
    fn bucket_never_exceeds_capacity() {
        let mut clock = VirtualClock::new(0, 0);
        let mut bucket = TokenBucket::new(3, 30, 0);
        clock.advance(10_000);
        bucket.refill(clock.now());
        assert!(bucket.tokens() <= bucket.capacity());
        for _ in 0..10 {
            bucket.acquire(&mut clock);
            assert!(bucket.tokens() >= 0.0);
            assert!(bucket.tokens() <= bucket.capacity());
        }
    }

    #[test]
    fn idle_bucket_allows_immediate_single_probe() {
        let mut clock = VirtualClock::new(0, 0);
        let mut bucket = TokenBucket::per_minute(10, 0);
        bucket.acquire(&mut clock);
        assert_eq!(clock.now(), 0);
        bucket.acquire(&mut clock);
        assert_eq!(clock.now(), 6);
    }
}
