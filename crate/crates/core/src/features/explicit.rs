//! Explicit features read directly from user metadata.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::User;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitFeatures {
    pub verified: u8,
    pub register_age_days: u64,
    pub status_count: u64,
    pub favor_count: u64,
    pub follower_count: u64,
    pub following_count: u64,
}

/// Copy the six metadata fields, deriving account age from the corpus
/// reference date.
pub fn extract_explicit(user: &User, reference_date: NaiveDate) -> Result<ExplicitFeatures> {
    if user.registered_at > reference_date {
        return Err(Error::InvalidInput(format!(
            "user {} registered {} after reference date {}",
            user.user_id, user.registered_at, reference_date
        )));
    }
    let register_age_days = (reference_date - user.registered_at).num_days() as u64;
    Ok(ExplicitFeatures {
        verified: user.verified as u8,
        register_age_days,
        status_count: user.status_count,
        favor_count: user.favor_count,
        follower_count: user.follower_count,
        following_count: user.following_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(verified: bool, registered_at: NaiveDate) -> User {
        User {
            user_id: "u".to_string(),
            verified,
            registered_at,
            status_count: 11,
            favor_count: 22,
            follower_count: 33,
            following_count: 44,
            interest_tokens: vec![],
        }
    }

    #[test]
    fn age_in_days_from_reference() {
        let reference = NaiveDate::from_ymd_opt(2020, 4, 10).unwrap();
        let registered = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let f = extract_explicit(&user(true, registered), reference).unwrap();
        assert_eq!(f.verified, 1);
        assert_eq!(f.register_age_days, 100);
        assert_eq!(
            (f.status_count, f.favor_count, f.follower_count, f.following_count),
            (11, 22, 33, 44)
        );
    }

    #[test]
    fn registration_on_reference_date_is_age_zero() {
        let day = NaiveDate::from_ymd_opt(2020, 4, 10).unwrap();
        let f = extract_explicit(&user(false, day), day).unwrap();
        assert_eq!(f.register_age_days, 0);
        assert_eq!(f.verified, 0);
    }

    #[test]
    fn future_registration_rejected() {
        let reference = NaiveDate::from_ymd_opt(2020, 4, 10).unwrap();
        let registered = NaiveDate::from_ymd_opt(2020, 4, 11).unwrap();
        assert!(extract_explicit(&user(false, registered), reference).is_err());
    }
}
