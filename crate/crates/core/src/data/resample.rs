use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::{DataError, PriceTable};

/// The anchor date that closes the week containing `date`.
fn week_end(date: NaiveDate, anchor: Weekday) -> NaiveDate {
    let ahead = (anchor.num_days_from_monday() + 7 - date.weekday().num_days_from_monday()) % 7;
    date + Duration::days(i64::from(ahead))
}

/// Collapse a daily table to one row per week ending on `anchor`.
///
/// Each weekly row holds the last close at or before the anchor day; a week
/// without any observation repeats the previous week. A final week that ends
/// after the last observation is dropped. Row timestamps are the
/// anchor dates themselves, so calendars with different trading days map to
/// the same weekly grid.
pub fn resample_weekly(daily: &PriceTable, anchor: Weekday) -> Result<PriceTable, DataError> {
    if daily.n_rows() == 0 {
        return Err(DataError::Empty);
    }
    let first = week_end(daily.timestamps[0], anchor);
    // A trailing week whose anchor lies past the data is incomplete.
    let end = *daily.timestamps.last().expect("non-empty");
    let mut last = week_end(end, anchor);
    if last > end {
        last -= Duration::days(7);
    }

    let mut timestamps = Vec::new();
    let mut prices: Vec<Vec<f64>> = Vec::new();
    let mut cursor = 0;
    let mut week = first;
    while week <= last {
        while cursor + 1 < daily.n_rows() && daily.timestamps[cursor + 1] <= week {
            cursor += 1;
        }
        let row = if daily.timestamps[cursor] <= week {
            daily.prices[cursor].clone()
        } else {
            prices.last().cloned().expect("first week always has an observation")
        };
        timestamps.push(week);
        prices.push(row);
        week += Duration::days(7);
    }
    if timestamps.len() < 2 {
        return Err(DataError::TooFewDates(timestamps.len()));
    }
    PriceTable::new(daily.assets.clone(), timestamps, prices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(dates: Vec<NaiveDate>) -> PriceTable {
        let prices = (0..dates.len()).map(|k| vec![100.0 + k as f64]).collect();
        PriceTable::new(vec!["A".into()], dates, prices).unwrap()
    }

    #[test]
    fn fourteen_days_two_fridays() {
        // 2024-01-06 is a Saturday: 14 days cover two Friday-ending weeks.
        let start = NaiveDate::from_ymd_opt(2024, 1, 6).unwrap();
        let dates: Vec<_> = (0..14).map(|k| start + Duration::days(k)).collect();
        let t = resample_weekly(&table(dates), Weekday::Fri).unwrap();
        assert_eq!(
            t.timestamps,
            vec![NaiveDate::from_ymd_opt(2024, 1, 12).unwrap(), NaiveDate::from_ymd_opt(2024, 1, 19).unwrap()]
        );
        // Fridays are day offsets 6 and 13.
        assert_eq!(t.column(0), vec![106.0, 113.0]);
    }

    #[test]
    fn missing_anchor_uses_previous_day() {
        // Mon..Thu of one week, then Mon..Fri of the next.
        let mon = NaiveDate::from_ymd_opt(2024, 1, 8).unwrap();
        let mut dates: Vec<_> = (0..4).map(|k| mon + Duration::days(k)).collect();
        dates.extend((7..12).map(|k| mon + Duration::days(k)));
        let t = resample_weekly(&table(dates), Weekday::Fri).unwrap();
        assert_eq!(t.column(0), vec![103.0, 108.0]);
    }

    #[test]
    fn empty_week_forward_filled() {
        let a = NaiveDate::from_ymd_opt(2024, 1, 5).unwrap();
        let dates = vec![a, a + Duration::days(14)];
        let t = resample_weekly(&table(dates), Weekday::Fri).unwrap();
        assert_eq!(t.column(0), vec![100.0, 100.0, 101.0]);
    }
}
