//! Unit-annotated parameter documents and the bundled Er:YSO preset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytic::{LinkParams, ReadoutConfig};
use crate::error::{Error, Result};
use crate::params::{derive_rates, wavelength_to_angular, CavityParams, DerivedRates, IonParams, PurcellModel};
use crate::units::Quantity;

/// Raw JSON source of the bundled preset.
pub const ER167_YSO_JSON: &str = include_str!("../presets/er167_yso.json");

type Section = BTreeMap<String, Quantity>;

/// A parameter file as written on disk: named sections of unit-annotated
/// quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetDocument {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub ion: Section,
    #[serde(default)]
    pub cavity: Section,
    #[serde(default)]
    pub link: Section,
    #[serde(default)]
    pub readout: Section,
    #[serde(default)]
    pub dipole: Section,
}

const ION_KEYS: &[&str] = &["gamma_r", "gamma_nr", "gamma_star", "chi", "beta", "omega_g", "delta_eg"];
const CAVITY_KEYS: &[&str] = &["g", "kappa", "delta", "wavelength", "optical_frequency", "n_max", "purcell"];
const LINK_KEYS: &[&str] = &[
    "l0", "l_att", "signal_speed", "eta_c", "eta_d", "t_init", "t_init_lifetimes", "delta_w",
];
const READOUT_KEYS: &[&str] = &["pulses", "period", "period_lifetimes", "xi", "p_eta_d"];
const DIPOLE_KEYS: &[&str] = &[
    "delta_mu",
    "epsilon",
    "magnetic_moment",
    "reference_shift",
    "reference_separation",
    "shift_error_ratio",
];

impl PresetDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        doc.check_keys()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preset serializes")
    }

    fn sections(&self) -> [(&'static str, &Section, &'static [&'static str]); 5] {
        [
            ("ion", &self.ion, ION_KEYS),
            ("cavity", &self.cavity, CAVITY_KEYS),
            ("link", &self.link, LINK_KEYS),
            ("readout", &self.readout, READOUT_KEYS),
            ("dipole", &self.dipole, DIPOLE_KEYS),
        ]
    }

    fn check_keys(&self) -> Result<()> {
        for (name, section, keys) in self.sections() {
            if let Some(k) = section.keys().find(|k| !keys.contains(&k.as_str())) {
                return Err(Error::Invalid(format!("unknown key `{name}.{k}`")));
            }
        }
        Ok(())
    }

    /// Applies `section.key = value`, e.g. `ion.gamma_star` = `2pi*32 Hz`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| Error::Invalid(format!("unknown key `{key}`")))?;
        let (target, keys) = match section {
            "ion" => (&mut self.ion, ION_KEYS),
            "cavity" => (&mut self.cavity, CAVITY_KEYS),
            "link" => (&mut self.link, LINK_KEYS),
            "readout" => (&mut self.readout, READOUT_KEYS),
            "dipole" => (&mut self.dipole, DIPOLE_KEYS),
            _ => return Err(Error::Invalid(format!("unknown key `{key}`"))),
        };
        if !keys.contains(&field) {
            return Err(Error::Invalid(format!("unknown key `{key}`")));
        }
        let q: Quantity = value.parse()?;
        // mutually exclusive alternatives
        let sibling = match field {
            "t_init" => Some("t_init_lifetimes"),
            "t_init_lifetimes" => Some("t_init"),
            "period" => Some("period_lifetimes"),
            "period_lifetimes" => Some("period"),
            "wavelength" => Some("optical_frequency"),
            "optical_frequency" => Some("wavelength"),
            _ => None,
        };
        if let Some(s) = sibling {
            target.remove(s);
        }
        target.insert(field.to_owned(), q);
        Ok(())
    }

    pub fn resolve(&self) -> Result<Preset> {
        self.check_keys()?;
        fn get<'a>(s: &'a Section, k: &'static str) -> Result<&'a Quantity> {
            s.get(k).ok_or(Error::Missing(k))
        }
        let opt = |s: &Section, k: &str| s.get(k).cloned();

        let ion = IonParams {
            gamma_r: get(&self.ion, "gamma_r")?.rad_per_s()?,
            gamma_nr: get(&self.ion, "gamma_nr")?.rad_per_s()?,
            gamma_star: get(&self.ion, "gamma_star")?.rad_per_s()?,
            chi: opt(&self.ion, "chi").map(|q| q.rad_per_s()).transpose()?.unwrap_or(0.0),
            beta: opt(&self.ion, "beta").map(|q| q.number()).transpose()?.unwrap_or(1.0),
            omega_g: opt(&self.ion, "omega_g").map(|q| q.rad_per_s()).transpose()?.unwrap_or(0.0),
            delta_eg: opt(&self.ion, "delta_eg")
                .map(|q| q.rad_per_s())
                .transpose()?
                .unwrap_or(f64::INFINITY),
        };
        ion.validate()?;

        let kappa = get(&self.cavity, "kappa")?.rad_per_s()?;
        let purcell = opt(&self.cavity, "purcell").map(|q| q.number()).transpose()?;
        let g = match (opt(&self.cavity, "g"), purcell) {
            (Some(q), _) => q.rad_per_s()?,
            // bad-cavity relation F_p = 4g²/(γ_r κ)
            (None, Some(fp)) => (fp * ion.gamma_r * kappa / 4.0).sqrt(),
            (None, None) => return Err(Error::Missing("cavity.g or cavity.purcell")),
        };
        let optical_frequency = match (opt(&self.cavity, "optical_frequency"), opt(&self.cavity, "wavelength")) {
            (Some(q), _) => Some(q.rad_per_s()?),
            (None, Some(q)) => Some(wavelength_to_angular(q.meters()?)),
            (None, None) => None,
        };
        let n_max = opt(&self.cavity, "n_max").map(|q| q.number()).transpose()?.unwrap_or(2.0);
        if n_max < 1.0 || n_max.fract() != 0.0 {
            return Err(Error::Truncation(n_max.max(0.0) as usize));
        }
        let cavity = CavityParams {
            g,
            kappa,
            delta: opt(&self.cavity, "delta").map(|q| q.rad_per_s()).transpose()?.unwrap_or(0.0),
            optical_frequency,
            n_max: n_max as usize,
        };

        let l = &self.link;
        let init = match (opt(l, "t_init"), opt(l, "t_init_lifetimes")) {
            (Some(q), _) => Wait::Seconds(q.seconds()?),
            (None, Some(q)) => Wait::Lifetimes(q.number()?),
            (None, None) => Wait::Seconds(0.0),
        };
        let link = LinkParams {
            l0_km: opt(l, "l0").map(|q| q.kilometers()).transpose()?.unwrap_or(37.5),
            l_att_km: opt(l, "l_att").map(|q| q.kilometers()).transpose()?.unwrap_or(22.0),
            signal_speed: opt(l, "signal_speed")
                .map(|q| q.meters_per_second())
                .transpose()?
                .unwrap_or(2e8),
            eta_c: opt(l, "eta_c").map(|q| q.number()).transpose()?.unwrap_or(1.0),
            eta_d: opt(l, "eta_d").map(|q| q.number()).transpose()?.unwrap_or(1.0),
            t_init: 0.0,
            delta_w: opt(l, "delta_w").map(|q| q.rad_per_s()).transpose()?.unwrap_or(0.0),
        };

        let r = &self.readout;
        let period = match (opt(r, "period"), opt(r, "period_lifetimes")) {
            (Some(q), _) => Wait::Seconds(q.seconds()?),
            (None, Some(q)) => Wait::Lifetimes(q.number()?),
            (None, None) => Wait::Lifetimes(2.0),
        };
        let pulses = opt(r, "pulses").map(|q| q.number()).transpose()?.unwrap_or(7.0);
        if pulses < 1.0 || pulses.fract() != 0.0 {
            return Err(Error::Invalid(format!("readout.pulses must be a positive integer, got {pulses}")));
        }
        let readout = ReadoutConfig {
            pulses: pulses as u32,
            period: 0.0,
            xi: opt(r, "xi").map(|q| q.number()).transpose()?.unwrap_or(0.0),
            p_eta_d: opt(r, "p_eta_d").map(|q| q.number()).transpose()?.unwrap_or(1.0),
        };

        let d = &self.dipole;
        let dipole = DipoleSettings {
            delta_mu: opt(d, "delta_mu").map(|q| q.coulomb_meters()).transpose()?.unwrap_or(0.84e-31),
            epsilon: opt(d, "epsilon").map(|q| q.number()).transpose()?.unwrap_or(3.2),
            magnetic_moment: opt(d, "magnetic_moment").map(|q| q.joules_per_tesla()).transpose()?,
            reference_shift_hz: opt(d, "reference_shift").map(|q| q.hz()).transpose()?.unwrap_or(250e3),
            reference_separation_m: opt(d, "reference_separation")
                .map(|q| q.meters())
                .transpose()?
                .unwrap_or(5e-9),
            shift_error_ratio: opt(d, "shift_error_ratio").map(|q| q.number()).transpose()?.unwrap_or(0.02),
        };

        let preset = Preset {
            name: self.name.clone(),
            ion,
            cavity,
            purcell,
            link,
            init_wait: init,
            readout,
            readout_period: period,
            dipole,
        };
        let rates = preset.rates()?;
        let mut preset = preset;
        preset.link.t_init = preset.init_wait.seconds(rates.gamma_prime);
        preset.readout.period = preset.readout_period.seconds(rates.gamma_prime);
        preset.link.validate()?;
        preset.readout.validate()?;
        Ok(preset)
    }
}

/// A duration given either absolutely or in units of the enhanced lifetime 1/γ′.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Wait {
    Seconds(f64),
    Lifetimes(f64),
}

impl Wait {
    pub fn seconds(&self, gamma_prime: f64) -> f64 {
        match *self {
            Wait::Seconds(s) => s,
            Wait::Lifetimes(n) => n / gamma_prime,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleSettings {
    pub delta_mu: f64,
    pub epsilon: f64,
    pub magnetic_moment: Option<f64>,
    /// Shift at the reference separation (Hz).
    pub reference_shift_hz: f64,
    pub reference_separation_m: f64,
    /// δν/Δν.
    pub shift_error_ratio: f64,
}

/// Resolved parameter set in SI units (rates in rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub ion: IonParams<f64>,
    pub cavity: CavityParams<f64>,
    /// Fixed Purcell factor, when given instead of g.
    pub purcell: Option<f64>,
    /// `t_init` is already resolved against the preset's own γ′.
    pub link: LinkParams<f64>,
    pub init_wait: Wait,
    /// `period` is already resolved against the preset's own γ′.
    pub readout: ReadoutConfig<f64>,
    pub readout_period: Wait,
    pub dipole: DipoleSettings,
}

impl Preset {
    pub fn purcell_model(&self) -> PurcellModel<f64> {
        match self.purcell {
            Some(fp) => PurcellModel::Override(fp),
            None => PurcellModel::BadCavity,
        }
    }

    pub fn rates(&self) -> Result<DerivedRates<f64>> {
        derive_rates(&self.ion, &self.cavity, self.purcell_model())
    }

    /// Same ion and cavity with a different fixed Purcell factor; lifetime-
    /// relative waits are re-resolved.
    pub fn with_purcell(&self, fp: f64) -> Result<Preset> {
        let mut p = self.clone();
        p.purcell = Some(fp);
        p.cavity.g = (fp * p.ion.gamma_r * p.cavity.kappa / 4.0).sqrt();
        let gp = p.rates()?.gamma_prime;
        p.link.t_init = p.init_wait.seconds(gp);
        p.readout.period = p.readout_period.seconds(gp);
        Ok(p)
    }
}

pub fn er167_yso_document() -> PresetDocument {
    PresetDocument::from_json(ER167_YSO_JSON).expect("bundled preset parses")
}

/// The bundled Er:YSO preset, resolved.
pub fn er167_yso() -> Preset {
    er167_yso_document().resolve().expect("bundled preset resolves")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::two_pi_hz;
    use approx::assert_relative_eq;

    #[test]
    fn bundled_preset_values() {
        let p = er167_yso();
        assert_relative_eq!(p.ion.gamma_r, two_pi_hz(3.0), max_relative = 1e-15);
        assert_relative_eq!(p.ion.gamma(), two_pi_hz(14.0), max_relative = 1e-15);
        assert_relative_eq!(p.ion.gamma_star, two_pi_hz(32.0), max_relative = 1e-15);
        assert_relative_eq!(p.ion.chi, two_pi_hz(0.12), max_relative = 1e-15);
        assert_relative_eq!(p.ion.delta_eg, two_pi_hz(100e6), max_relative = 1e-15);
        assert_eq!(p.purcell, Some(5000.0));
        assert_eq!(p.cavity.n_max, 2);
        // 8/γ′ ≈ 85 µs
        assert!((p.link.t_init - 85e-6).abs() < 0.5e-6);
        assert!((p.readout.period - 21.4e-6).abs() < 1e-12);
        let r = p.rates().unwrap();
        assert_relative_eq!(r.purcell, 5000.0, max_relative = 1e-12);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let mut doc = er167_yso_document();
        doc.set("ion.gamma_star", "2pi*0 Hz").unwrap();
        doc.set("link.t_init", "0 s").unwrap();
        let p = doc.resolve().unwrap();
        assert_eq!(p.ion.gamma_star, 0.0);
        assert_eq!(p.link.t_init, 0.0);
        let err = doc.set("ion.bogus", "1").unwrap_err();
        assert!(err.to_string().contains("ion.bogus"));
        assert!(doc.set("nosection", "1").is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let doc = er167_yso_document();
        let again = PresetDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn purcell_change_rescales_lifetime_waits() {
        let p = er167_yso().with_purcell(4.5e5).unwrap();
        let gp = p.rates().unwrap().gamma_prime;
        assert_relative_eq!(p.link.t_init, 8.0 / gp, max_relative = 1e-14);
    }
}
