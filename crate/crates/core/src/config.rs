//! Network configuration files.
//!
//! A configuration is a TOML document with three sections. Keys ending in
//! `_dB` hold decibel values and are converted to linear units on load; the
//! file itself never stores the linear form.
//!
//! ```toml
//! [radio]
//! tx_power_dB = 0
//! alpha_in = 2.5
//! alpha_out = 3.0
//! noise_dB = -30
//! beta_dB = 10
//! ru_density = 0.1
//! cloud_density = 1e-4
//! antennas = 10
//!
//! [geometry]
//! cloud_radius = 30
//! guard_radius = 2
//! user_distance = 10
//!
//! [content]
//! files = 20
//! memory = 10
//! zipf_skewness = 0.7
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::content::Popularity;
use crate::error::{Error, Result};
use crate::hitprob::InterferenceLaw;
use crate::interference::RadioParams;
use crate::CloudGeometry;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RadioSection {
    tx_power_dB: f64,
    alpha_in: f64,
    alpha_out: f64,
    noise_dB: f64,
    beta_dB: f64,
    ru_density: f64,
    cloud_density: f64,
    antennas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    cloud_radius: f64,
    guard_radius: f64,
    user_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContentSection {
    files: usize,
    memory: usize,
    zipf_skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum LawKey {
    #[default]
    Inversion,
    Gamma,
    GilPelaez,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AnalysisSection {
    #[serde(default)]
    interference_law: LawKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    radio: RadioSection,
    geometry: GeometrySection,
    content: ContentSection,
    #[serde(default)]
    analysis: AnalysisSection,
}

/// Everything that defines one evaluation point, in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub params: RadioParams,
    /// Cloud radius, guard radius and user distance (`x_norm`).
    pub geom: CloudGeometry,
    pub files: usize,
    pub memory: usize,
    pub zipf: f64,
    pub law: InterferenceLaw,
}

impl NetworkConfig {
    /// The reference evaluation point.
    pub fn reference() -> Self {
        Self {
            params: RadioParams::reference(),
            geom: CloudGeometry {
                d: 30.0,
                d_g: 2.0,
                x_norm: 10.0,
            },
            files: 20,
            memory: 10,
            zipf: 0.7,
            law: InterferenceLaw::default(),
        }
    }

    /// Lists every violated consistency rule.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(Error::Config(msg)) = self.params.validate() {
            problems.push(msg);
        }
        let g = &self.geom;
        if !(g.d > 0.0) || !g.d.is_finite() {
            problems.push(format!("cloud radius must be positive, got {}", g.d));
        }
        if !(g.d_g >= 0.0) || !g.d_g.is_finite() {
            problems.push(format!("guard radius must be nonnegative, got {}", g.d_g));
        }
        if !(g.x_norm >= 0.0 && g.x_norm <= g.d) {
            problems.push(format!(
                "user distance {} must lie in [0, cloud radius {}]",
                g.x_norm, g.d
            ));
        }
        if self.files == 0 {
            problems.push("library must hold at least one file".into());
        }
        if self.memory == 0 || self.memory > self.files {
            problems.push(format!(
                "memory size {} must lie in [1, {}]",
                self.memory, self.files
            ));
        }
        if !(self.zipf >= 0.0) || !self.zipf.is_finite() {
            problems.push(format!(
                "zipf skewness must be nonnegative, got {}",
                self.zipf
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn popularity(&self) -> Result<Popularity<f64>> {
        Popularity::zipf(self.files, self.zipf)
    }

    /// Parses a configuration document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let r = &file.radio;
        let cfg = Self {
            params: RadioParams {
                p_tx: db_to_linear(r.tx_power_dB),
                alpha_i: r.alpha_in,
                alpha_o: r.alpha_out,
                sigma2: db_to_linear(r.noise_dB),
                beta: db_to_linear(r.beta_dB),
                lambda: r.ru_density,
                lambda_p: r.cloud_density,
                m: r.antennas,
            },
            geom: CloudGeometry {
                d: file.geometry.cloud_radius,
                d_g: file.geometry.guard_radius,
                x_norm: file.geometry.user_distance,
            },
            files: file.content.files,
            memory: file.content.memory,
            zipf: file.content.zipf_skewness,
            law: match file.analysis.interference_law {
                LawKey::Inversion => InterferenceLaw::LaplaceInversion,
                LawKey::Gamma => InterferenceLaw::GammaSurrogate,
                LawKey::GilPelaez => InterferenceLaw::GilPelaez,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Renders the configuration with decibel keys.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let file = ConfigFile {
            radio: RadioSection {
                tx_power_dB: linear_to_db(p.p_tx),
                alpha_in: p.alpha_i,
                alpha_out: p.alpha_o,
                noise_dB: linear_to_db(p.sigma2),
                beta_dB: linear_to_db(p.beta),
                ru_density: p.lambda,
                cloud_density: p.lambda_p,
                antennas: p.m,
            },
            geometry: GeometrySection {
                cloud_radius: self.geom.d,
                guard_radius: self.geom.d_g,
                user_distance: self.geom.x_norm,
            },
            content: ContentSection {
                files: self.files,
                memory: self.memory,
                zipf_skewness: self.zipf,
            },
            analysis: AnalysisSection {
                interference_law: match self.law {
                    InterferenceLaw::LaplaceInversion => LawKey::Inversion,
                    InterferenceLaw::GammaSurrogate => LawKey::Gamma,
                    InterferenceLaw::GilPelaez => LawKey::GilPelaez,
                },
            },
        };
        toml::to_string(&file).expect("configuration serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const REFERENCE: &str = r#"
        [radio]
        tx_power_dB = 0
        alpha_in = 2.5
        alpha_out = 3.0
        noise_dB = -30
        beta_dB = 10
        ru_density = 0.1
        cloud_density = 1e-4
        antennas = 10

        [geometry]
        cloud_radius = 30
        guard_radius = 2
        user_distance = 10

        [content]
        files = 20
        memory = 10
        zipf_skewness = 0.7
    "#;

    #[test]
    fn reference_file_in_linear_units() {
        let cfg = NetworkConfig::from_toml(REFERENCE).unwrap();
        let want = NetworkConfig::reference();
        assert_relative_eq!(cfg.params.p_tx, 1.0);
        assert_relative_eq!(cfg.params.sigma2, 1e-3, max_relative = 1e-12);
        assert_relative_eq!(cfg.params.beta, 10.0, max_relative = 1e-12);
        assert_eq!(cfg.params.m, 10);
        assert_eq!(cfg.geom, want.geom);
        assert_eq!((cfg.files, cfg.memory), (20, 10));
        assert_eq!(cfg.law, InterferenceLaw::LaplaceInversion);
    }

    #[test]
    fn round_trip() {
        let cfg = NetworkConfig::reference();
        let back = NetworkConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_relative_eq!(back.params.beta, cfg.params.beta, max_relative = 1e-12);
        assert_relative_eq!(back.params.sigma2, cfg.params.sigma2, max_relative = 1e-12);
        assert_eq!(back.geom, cfg.geom);
    }

    #[test]
    fn missing_key_is_named() {
        let text = REFERENCE.replace("beta_dB = 10", "");
        let err = NetworkConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("beta_dB"), "{err}");
    }

    #[test]
    fn parse_error_has_position() {
        let text = REFERENCE.replace("antennas = 10", "antennas = ten");
        let err = NetworkConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn exponent_ordering_rejected() {
        let text = REFERENCE.replace("alpha_in = 2.5", "alpha_in = 3.5");
        let err = NetworkConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("alpha") || err.contains("exponent"), "{err}");
    }

    #[test]
    fn user_outside_cloud_and_memory_listed_together() {
        let text = REFERENCE
            .replace("user_distance = 10", "user_distance = 31")
            .replace("memory = 10", "memory = 21");
        let err = NetworkConfig::from_toml(&text).unwrap_err().to_string();
        assert!(
            err.contains("user distance") && err.contains("memory"),
            "{err}"
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = REFERENCE.replace("antennas = 10", "antennas = 10\nbogus = 1");
        assert!(NetworkConfig::from_toml(&text).is_err());
    }
}
