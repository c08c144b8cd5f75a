//! Flat `key = value` configuration files.
//!
//! One key per line, `#` starts a comment, unknown keys are errors so typos
//! do not silently fall back to defaults.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::depth_seg::SegParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    BadLine(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
}

/// Parses the flat key=value format into a map, last value wins.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine(idx + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl SegParams {
    /// Applies overrides from a key=value document on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<SegParams, ConfigError> {
        let mut params = SegParams::default();
        for (key, value) in parse_kv(text)? {
            match key.as_str() {
                "d1_half_span" => params.d1_half_span = parse_field(&key, &value)?,
                "d2_half_span" => params.d2_half_span = parse_field(&key, &value)?,
                "d1_threshold" => params.d1_threshold = parse_field(&key, &value)?,
                "d2_threshold" => params.d2_threshold = parse_field(&key, &value)?,
                "mask_dilate_radius" => params.mask_dilate_radius = parse_field(&key, &value)?,
                "close_dilate_radius" => params.close_dilate_radius = parse_field(&key, &value)?,
                "erode_radius" => params.erode_radius = parse_field(&key, &value)?,
                "min_pixels" => params.min_pixels = parse_field(&key, &value)?,
                "expected_width_m" => params.expected_width_m = parse_field(&key, &value)?,
                "expected_height_m" => params.expected_height_m = parse_field(&key, &value)?,
                "size_tolerance" => params.size_tolerance = parse_field(&key, &value)?,
                "border_reject_fraction" => params.border_reject_fraction = parse_field(&key, &value)?,
                _ => return Err(ConfigError::UnknownKey(key)),
            }
        }
        Ok(params)
    }

    /// Serializes every parameter, one key per line, parseable by
    /// [`SegParams::from_kv_str`]. Doubles as the documentation of defaults.
    pub fn to_kv_string(&self) -> String {
        format!(
            "# depth segmentation parameters\n\
             d1_half_span = {}\n\
             d2_half_span = {}\n\
             d1_threshold = {}          # mm per pixel\n\
             d2_threshold = {}          # mm per pixel^2\n\
             mask_dilate_radius = {}\n\
             close_dilate_radius = {}\n\
             erode_radius = {}\n\
             min_pixels = {}\n\
             expected_width_m = {}\n\
             expected_height_m = {}\n\
             size_tolerance = {}\n\
             border_reject_fraction = {}\n",
            self.d1_half_span,
            self.d2_half_span,
            self.d1_threshold,
            self.d2_threshold,
            self.mask_dilate_radius,
            self.close_dilate_radius,
            self.erode_radius,
            self.min_pixels,
            self.expected_width_m,
            self.expected_height_m,
            self.size_tolerance,
            self.border_reject_fraction,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let map = parse_kv("# header\n\na = 1 # trailing\n b = two \n").unwrap();
        assert_eq!(map.get("a").unwrap(), "1");
        assert_eq!(map.get("b").unwrap(), "two");
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(parse_kv("nonsense\n"), Err(ConfigError::BadLine(1))));
    }

    #[test]
    fn seg_params_round_trip() {
        let mut params = SegParams::default();
        params.d1_half_span = 2;
        params.d1_threshold = 35.5;
        params.expected_width_m = 0.08;
        let text = params.to_kv_string();
        assert_eq!(SegParams::from_kv_str(&text).unwrap(), params);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            SegParams::from_kv_str("no_such_knob = 3"),
            Err(ConfigError::UnknownKey(_))
        ));
    }
}
