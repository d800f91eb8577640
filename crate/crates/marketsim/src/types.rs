use chrono::{Datelike, NaiveDate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tenure {
    /// Between two and five years since signup.
    Medium,
    /// More than five years since signup.
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Volume {
    Average,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeasonProfile {
    SummerPeaked,
    WinterPeaked,
    Flat,
}

impl Gender {
    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl Tenure {
    pub fn label(self) -> &'static str {
        match self {
            Tenure::Medium => "medium",
            Tenure::High => "high",
        }
    }
}

impl Volume {
    pub fn label(self) -> &'static str {
        match self {
            Volume::Average => "average",
            Volume::High => "high",
        }
    }
}

impl SeasonProfile {
    pub fn label(self) -> &'static str {
        match self {
            SeasonProfile::SummerPeaked => "summer",
            SeasonProfile::WinterPeaked => "winter",
            SeasonProfile::Flat => "flat",
        }
    }
}

/// Months with planted seasonal demand peaks.
pub const SUMMER_MONTHS: [u32; 4] = [5, 6, 7, 8];
pub const WINTER_MONTHS: [u32; 4] = [11, 12, 1, 2];

/// Tenure thresholds in days before the horizon end.
pub const TENURE_HIGH_MIN_DAYS: u32 = 5 * 365 + 1;
pub const TENURE_MEDIUM_MIN_DAYS: u32 = 2 * 365;

#[derive(Clone, Debug, PartialEq)]
pub struct Customer {
    pub id: u32,
    pub gender: Gender,
    pub tenure: Tenure,
    pub volume: Volume,
    /// Simplex weights over categories; nonnegative, sums to 1.
    pub affinity: Vec<f64>,
    /// Signup offset in days before the horizon end.
    pub signup_days_before_end: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub id: u32,
    pub category: u32,
    /// Word indices into the world vocabulary; 2..=12 tokens.
    pub title: Vec<u32>,
    pub base_price: f64,
    /// Probability that a purchaser of this product is female.
    pub gender_skew: f64,
    pub season: SeasonProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderRecord {
    pub id: u32,
    pub customer: u32,
    pub product: u32,
    pub price: f64,
    pub date: NaiveDate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocabEntry {
    pub word: String,
    /// Number of product titles containing the word.
    pub df: u32,
}

/// Inclusive date range the order log lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Horizon {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Horizon {
    /// The default simulated year.
    pub fn default_year() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(),
        }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        d >= self.start && d <= self.end
    }

    /// Days from start to end, inclusive span minus one (364 for one year).
    pub fn span_days(&self) -> i64 {
        (self.end - self.start).num_days()
    }

    pub fn day_offset(&self, d: NaiveDate) -> i64 {
        (d - self.start).num_days()
    }

    pub fn date_at(&self, offset: i64) -> NaiveDate {
        self.start + chrono::Days::new(offset as u64)
    }

    /// All day offsets whose month is in the given set.
    pub fn offsets_in_months(&self, months: &[u32]) -> Vec<i64> {
        (0..=self.span_days())
            .filter(|&o| months.contains(&self.date_at(o).month()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub customers: usize,
    pub products: usize,
    pub categories: usize,
    pub orders: usize,
    pub seed: u64,
    /// Planted label marginals.
    pub p_female: f64,
    pub p_high_tenure: f64,
    pub p_high_volume: f64,
    /// Order-intensity multiplier for high-volume customers.
    pub volume_weight: f64,
    /// Share of a peaked product's orders that fall in its four peak months.
    pub season_peak_mass: f64,
    pub category_words: usize,
    pub stop_words: usize,
}

impl WorldConfig {
    pub fn desk_default(seed: u64) -> Self {
        Self {
            customers: 2_000,
            products: 500,
            categories: 20,
            orders: 50_000,
            seed,
            p_female: 0.5,
            p_high_tenure: 0.45,
            p_high_volume: 0.3,
            volume_weight: 4.0,
            season_peak_mass: 0.7,
            category_words: 40,
            stop_words: 42,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarketplaceWorld {
    pub config: WorldConfig,
    pub horizon: Horizon,
    pub customers: Vec<Customer>,
    pub products: Vec<Product>,
    pub orders: Vec<OrderRecord>,
    pub vocab: Vec<VocabEntry>,
}

impl MarketplaceWorld {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn product(&self, id: u32) -> Option<&Product> {
        self.products.get(id as usize).filter(|p| p.id == id)
    }

    pub fn customer(&self, id: u32) -> Option<&Customer> {
        self.customers.get(id as usize).filter(|c| c.id == id)
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.vocab
            .iter()
            .position(|e| e.word == word)
            .map(|i| i as u32)
    }
}

/// Planted per-category structure, all deterministic functions of the index
/// so every run and every load agrees on them.
pub mod category {
    use super::SeasonProfile;

    /// Center of the category's female-purchaser share.
    pub fn gender_lean(k: usize) -> f64 {
        match k % 5 {
            0 | 1 => 0.85,
            2 | 3 => 0.15,
            _ => 0.5,
        }
    }

    /// First half of the categories lean toward long-tenured customers.
    pub fn is_legacy(k: usize, categories: usize) -> bool {
        k < categories / 2
    }

    pub fn season_tendency(k: usize) -> SeasonProfile {
        match k % 4 {
            0 => SeasonProfile::SummerPeaked,
            1 => SeasonProfile::WinterPeaked,
            _ => SeasonProfile::Flat,
        }
    }

    /// Log-spaced price band (lo, hi) per category.
    pub fn price_band(k: usize, categories: usize) -> (f64, f64) {
        let t = if categories <= 1 {
            0.0
        } else {
            k as f64 / (categories - 1) as f64
        };
        // Centers from ~$6 to ~$1500.
        let center = 6.0 * (250.0f64).powf(t);
        (center / 1.6, center * 1.6)
    }
}
