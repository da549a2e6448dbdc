//! Calendar-aligned UTC time buckets.

use chrono::{DateTime, Datelike, NaiveDate, Utc};

use crate::tduo::TemporalLevel;

fn midnight(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

/// Start of the bucket containing `ts` (seconds since the epoch). Weeks start
/// on Monday. `Any` leaves the timestamp unchanged.
pub fn bucket_start(ts: i64, level: TemporalLevel) -> i64 {
    match level {
        TemporalLevel::Secondly | TemporalLevel::Any => ts,
        TemporalLevel::Minutely => ts - ts.rem_euclid(60),
        TemporalLevel::Hourly => ts - ts.rem_euclid(3_600),
        TemporalLevel::Daily => ts - ts.rem_euclid(86_400),
        TemporalLevel::Weekly | TemporalLevel::Monthly | TemporalLevel::Yearly => {
            let date = DateTime::<Utc>::from_timestamp(ts, 0)
                .expect("timestamp in range")
                .date_naive();
            let start = match level {
                TemporalLevel::Weekly => {
                    date - chrono::Days::new(u64::from(date.weekday().num_days_from_monday()))
                }
                TemporalLevel::Monthly => date.with_day(1).expect("first of month"),
                _ => NaiveDate::from_ymd_opt(date.year(), 1, 1).expect("first of year"),
            };
            midnight(start)
        }
    }
}
