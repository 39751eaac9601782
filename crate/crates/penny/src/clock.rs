use chrono::NaiveDate;

use crate::ast::{TimeBase, TimeSpec};
use crate::PennyError;

const SECS_PER_DAY: u64 = 86_400;

/// Days between the simulation epoch (2004-01-01, GMT) and the given
/// two-digit-year civil date.
pub fn days_from_epoch(yy: u32, month: u32, day: u32) -> Result<i64, PennyError> {
    let date = NaiveDate::from_ymd_opt(2000 + yy as i32, month, day)
        .ok_or_else(|| PennyError::BadDate(format!("{month:02}/{day:02}/{yy:02}")))?;
    let epoch = NaiveDate::from_ymd_opt(2004, 1, 1).expect("epoch");
    Ok((date - epoch).num_days())
}

/// Explicitly advanced simulated time. `now` is seconds since the
/// simulation epoch in GMT; the local offset is fixed per clock, so
/// conversions between the bases are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualClock {
    now: u64,
    local_offset: i64,
}

impl VirtualClock {
    pub fn new(start: u64, local_offset: i64) -> Self {
        VirtualClock {
            now: start,
            local_offset,
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn local_offset(&self) -> i64 {
        self.local_offset
    }

    pub fn advance(&mut self, secs: u64) {
        self.now += secs;
    }

    /// Move forward to `ts`; never moves backward.
    pub fn advance_to(&mut self, ts: u64) {
        if ts > self.now {
            self.now = ts;
        }
    }
}

/// Turn a time literal into a GMT timestamp. Date-less absolute specs
/// mean that time of day on the clock's current day in the given base;
/// relative specs offset from the script start.
pub fn resolve_timespec(
    spec: &TimeSpec,
    clock: &VirtualClock,
    script_start: u64,
) -> Result<u64, PennyError> {
    let tod = (spec.hh as u64) * 3600 + (spec.mm as u64) * 60;
    let before_epoch = || PennyError::TimeBeforeEpoch(spec.to_string());
    match spec.base {
        TimeBase::Relative => Ok(script_start + tod),
        TimeBase::Gmt => match spec.date {
            Some((m, d, y)) => {
                let days = days_from_epoch(y, m, d)?;
                if days < 0 {
                    return Err(before_epoch());
                }
                Ok(days as u64 * SECS_PER_DAY + tod)
            }
            None => Ok((clock.now() / SECS_PER_DAY) * SECS_PER_DAY + tod),
        },
        TimeBase::Local => {
            let local_ts: i64 = match spec.date {
                Some((m, d, y)) => {
                    let days = days_from_epoch(y, m, d)?;
                    days * SECS_PER_DAY as i64 + tod as i64
                }
                None => {
                    let local_now = clock.now() as i64 + clock.local_offset();
                    if local_now < 0 {
                        return Err(before_epoch());
                    }
                    (local_now / SECS_PER_DAY as i64) * SECS_PER_DAY as i64 + tod as i64
                }
            };
            let gmt = local_ts - clock.local_offset();
            if gmt < 0 {
                return Err(before_epoch());
            }
            Ok(gmt as u64)
        }
    }
}
