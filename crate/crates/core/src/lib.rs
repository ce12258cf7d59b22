//! Alkaline electrolyzer pressure dynamics and a reference governor that
//! shapes stack power requests so the hydrogen pressure stays inside bounds.

pub mod electrochem;
pub mod governor;
pub mod harness;
pub mod params;
pub mod plant;
pub mod regulators;
pub mod units;
