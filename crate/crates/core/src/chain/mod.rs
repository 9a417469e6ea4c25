//! Repeater chains: end-to-end fidelity estimates, expected distribution
//! times and the direct-transmission baseline.

mod monte_carlo;

pub use monte_carlo::{monte_carlo_time, MonteCarloEstimate};

use serde::{Deserialize, Serialize};

use crate::analytic::{entangle_efficiency, LinkParams};
use crate::error::{positive, unit_interval, Error, Result};
use crate::params::DerivedRates;
use crate::Real;

/// How entanglement swapping is performed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SchemeKind<T> {
    /// Virtual-photon exchange without monitoring the cavity.
    ExchangeDeterministic,
    /// Virtual-photon exchange heralded on no cavity emission.
    ExchangePostselected { p_gate: T },
    /// Electric dipole–dipole CNOT between neighbouring ions.
    DipoleDipole,
    /// Communication/memory ion pair with a separate mapping step.
    ErEuHybrid { f_gate: T, p_gate: T },
}

impl<T: Real> SchemeKind<T> {
    /// Swap success probability p_s.
    pub fn swap_success(&self) -> T {
        match *self {
            SchemeKind::ExchangeDeterministic | SchemeKind::DipoleDipole => T::one(),
            SchemeKind::ExchangePostselected { p_gate } | SchemeKind::ErEuHybrid { p_gate, .. } => p_gate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.swap_success();
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::OutOfRange {
                name: "p_gate",
                value: p.to_f64_lossy(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        if let SchemeKind::ErEuHybrid { f_gate, .. } = *self {
            unit_interval("f_gate", f_gate)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::ExchangeDeterministic => "exchange",
            SchemeKind::ExchangePostselected { .. } => "exchange-postselected",
            SchemeKind::DipoleDipole => "dipole",
            SchemeKind::ErEuHybrid { .. } => "er-eu",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheduling {
    /// All elementary links attempted simultaneously.
    #[default]
    Parallel,
    /// Neighbouring links established one after the other.
    Sequential,
}

/// Fidelities of the individual protocol steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentFidelities<T> {
    pub init: T,
    pub entangle: T,
    pub gate: T,
    pub readout: T,
}

impl<T: Real> ComponentFidelities<T> {
    pub fn perfect() -> Self {
        Self {
            init: T::one(),
            entangle: T::one(),
            gate: T::one(),
            readout: T::one(),
        }
    }

    fn validate(&self) -> Result<()> {
        unit_interval("f_init", self.init)?;
        unit_interval("f_entangle", self.entangle)?;
        unit_interval("f_gate", self.gate)?;
        unit_interval("f_readout", self.readout)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig<T> {
    pub total_km: T,
    /// Number of elementary links m.
    pub links: u32,
    /// Elementary link; `l0_km` must equal total_km/links.
    pub link: LinkParams<T>,
    /// Heralding probability of one elementary-link attempt.
    pub p_en: T,
    pub scheme: SchemeKind<T>,
    pub fidelities: ComponentFidelities<T>,
    pub scheduling: Scheduling,
}

impl<T: Real> ChainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.links < 2 {
            return Err(Error::LinkCount(self.links as usize));
        }
        positive("total_km", self.total_km)?;
        self.link.validate()?;
        let l0 = self.total_km / T::lit(self.links as f64);
        if (self.link.l0_km - l0).abs() > T::lit(1e-9) * l0.max(T::one()) {
            return Err(Error::Invalid(format!(
                "link length {} km does not equal {} km / {}",
                self.link.l0_km, self.total_km, self.links
            )));
        }
        unit_interval("p_en", self.p_en)?;
        self.scheme.validate()?;
        self.fidelities.validate()
    }
}

/// Everything needed to build a chain at any total distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec<T> {
    pub links: u32,
    /// Link template; its length is replaced per distance.
    pub link: LinkParams<T>,
    pub rates: DerivedRates<T>,
    pub scheme: SchemeKind<T>,
    pub fidelities: ComponentFidelities<T>,
    pub scheduling: Scheduling,
}

impl<T: Real> ChainSpec<T> {
    pub fn at_distance(&self, total_km: T) -> ChainConfig<T> {
        let mut link = self.link;
        link.l0_km = total_km / T::lit(self.links as f64);
        let p_en = entangle_efficiency(&self.rates, &link).p_en;
        ChainConfig {
            total_km,
            links: self.links,
            link,
            p_en,
            scheme: self.scheme,
            fidelities: self.fidelities,
            scheduling: self.scheduling,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainBreakdown<T> {
    pub l0_km: T,
    /// L₀/c + T_init.
    pub attempt_time: T,
    pub p_en: T,
    pub p_s: T,
    /// f(m) for parallel or 2f(m/2) for sequential scheduling.
    pub attempt_factor: T,
    pub f_swap: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult<T> {
    /// High-fidelity estimate of the end-to-end fidelity.
    pub fidelity: T,
    pub expected_time: T,
    pub rate: T,
    pub breakdown: ChainBreakdown<T>,
}

/// Average number of attempt rounds f(m) = 0.64 log₂ m + 0.83, with f(1) = 1
/// and f(2) = 3/2.
pub fn nesting_factor<T: Real>(m: u32) -> T {
    match m {
        0 | 1 => T::one(),
        2 => T::lit(1.5),
        _ => T::lit(0.64) * T::lit(m as f64).log2() + T::lit(0.83),
    }
}

pub fn attempt_factor<T: Real>(m: u32, scheduling: Scheduling) -> T {
    match scheduling {
        Scheduling::Parallel => nesting_factor(m),
        Scheduling::Sequential => T::lit(2.0) * nesting_factor(m / 2),
    }
}

/// Swap fidelity for the scheme: F_gate·F_readout², or (F_gate·F_readout)²
/// for the hybrid scheme.
pub fn swap_fidelity<T: Real>(scheme: &SchemeKind<T>, f: &ComponentFidelities<T>) -> T {
    match *scheme {
        SchemeKind::ErEuHybrid { f_gate, .. } => (f_gate * f.readout).powi(2),
        _ => f.gate * f.readout * f.readout,
    }
}

/// Product of step fidelities; only meaningful when each is close to one.
pub fn end_to_end_fidelity<T: Real>(cfg: &ChainConfig<T>) -> Result<T> {
    if cfg.links < 2 {
        return Err(Error::LinkCount(cfg.links as usize));
    }
    cfg.fidelities.validate()?;
    cfg.scheme.validate()?;
    let m = cfg.links as i32;
    let f = &cfg.fidelities;
    let swap = swap_fidelity(&cfg.scheme, f);
    Ok(match cfg.scheme {
        SchemeKind::ErEuHybrid { .. } => {
            f.init.powi(3 * m + 1) * f.entangle.powi(m) * swap.powi(m - 1) * swap.powf(T::lit(m as f64 / 2.0))
        }
        _ => f.init.powi(2 * m) * f.entangle.powi(m) * swap.powi(m - 1),
    })
}

/// Expected time to distribute entanglement over the whole chain.
pub fn avg_time<T: Real>(cfg: &ChainConfig<T>) -> Result<T> {
    if cfg.links < 2 {
        return Err(Error::LinkCount(cfg.links as usize));
    }
    positive("p_en", cfg.p_en)?;
    cfg.scheme.validate()?;
    let ps = cfg.scheme.swap_success();
    Ok(attempt_factor::<T>(cfg.links, cfg.scheduling) * cfg.link.attempt_time()
        / (cfg.p_en * ps.powi(cfg.links as i32 - 1)))
}

/// (3/2)(L₀/c + T_init)/(p_en p_s): expected time for two neighbouring links
/// and one swap.
pub fn two_link_time<T: Real>(link: &LinkParams<T>, p_en: T, p_s: T) -> Result<T> {
    positive("p_en", p_en)?;
    positive("p_s", p_s)?;
    Ok(T::lit(1.5) * link.attempt_time() / (p_en * p_s))
}

pub fn evaluate_chain<T: Real>(cfg: &ChainConfig<T>) -> Result<ChainResult<T>> {
    cfg.validate()?;
    let fidelity = end_to_end_fidelity(cfg)?;
    let expected_time = avg_time(cfg)?;
    Ok(ChainResult {
        fidelity,
        expected_time,
        rate: expected_time.recip(),
        breakdown: ChainBreakdown {
            l0_km: cfg.link.l0_km,
            attempt_time: cfg.link.attempt_time(),
            p_en: cfg.p_en,
            p_s: cfg.scheme.swap_success(),
            attempt_factor: attempt_factor(cfg.links, cfg.scheduling),
            f_swap: swap_fidelity(&cfg.scheme, &cfg.fidelities),
        },
    })
}

/// Photon rate through L km of fiber from a source emitting `source_rate`.
pub fn direct_transmission_rate<T: Real>(l_km: T, source_rate: T, l_att_km: T) -> T {
    source_rate * (-l_km / l_att_km).exp()
}

/// Smallest distance in [lo, hi] where `a` overtakes `b`, located by a scan
/// over `steps` intervals of ln a − ln b followed by bisection.
pub fn crossover_distance<T: Real>(
    a: impl Fn(T) -> Result<T>,
    b: impl Fn(T) -> Result<T>,
    lo: T,
    hi: T,
    steps: usize,
) -> Result<Option<T>> {
    let diff = |x: T| -> Result<T> { Ok(a(x)?.ln() - b(x)?.ln()) };
    let steps = steps.max(1);
    let mut x0 = lo;
    if diff(x0)? > T::zero() {
        return Ok(Some(lo));
    }
    for i in 1..=steps {
        let x1 = lo + (hi - lo) * T::lit(i as f64) / T::lit(steps as f64);
        let d1 = diff(x1)?;
        if d1 > T::zero() {
            let (mut l, mut r) = (x0, x1);
            for _ in 0..200 {
                let mid = (l + r) * T::lit(0.5);
                if diff(mid)? > T::zero() {
                    r = mid;
                } else {
                    l = mid;
                }
                if r - l <= T::epsilon() * r.abs() * T::lit(4.0) {
                    break;
                }
            }
            return Ok(Some((l + r) * T::lit(0.5)));
        }
        x0 = x1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::LinkParams;
    use crate::presets::er167_yso;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_link(total: f64, m: u32) -> ChainConfig<f64> {
        let p = er167_yso();
        let rates = p.rates().unwrap();
        let mut link = p.link;
        link.t_init = 0.0;
        let spec = ChainSpec {
            links: m,
            link,
            rates,
            scheme: SchemeKind::ExchangeDeterministic,
            fidelities: ComponentFidelities::perfect(),
            scheduling: Scheduling::Parallel,
        };
        spec.at_distance(total)
    }

    #[test]
    fn nesting_factor_values() {
        assert_eq!(nesting_factor::<f64>(1), 1.0);
        assert_eq!(nesting_factor::<f64>(2), 1.5);
        assert_relative_eq!(nesting_factor::<f64>(8), 0.64 * 3.0 + 0.83, max_relative = 1e-15);
        assert_eq!(attempt_factor::<f64>(2, Scheduling::Sequential), 2.0);
    }

    #[test]
    fn perfect_components_give_unit_fidelity() {
        for m in [2u32, 4, 8, 16, 64] {
            for scheme in [SchemeKind::DipoleDipole, SchemeKind::ErEuHybrid { f_gate: 1.0, p_gate: 0.5 }] {
                let mut c = reference_link(100.0 * m as f64, m);
                c.scheme = scheme;
                assert_eq!(end_to_end_fidelity(&c).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn single_link_rejected() {
        let mut c = reference_link(300.0, 8);
        c.links = 1;
        assert!(matches!(end_to_end_fidelity(&c), Err(Error::LinkCount(1))));
        assert!(matches!(avg_time(&c), Err(Error::LinkCount(1))));
    }

    #[test]
    fn reference_waiting_times() {
        for (total, want) in [(300.0, 3.82e-3), (500.0, 19.83e-3)] {
            let c = reference_link(total, 8);
            let t = two_link_time(&c.link, c.p_en, 1.0).unwrap();
            assert!((t / want - 1.0).abs() < 0.01, "{t}");
        }
    }

    #[test]
    fn two_link_formula_matches_m2_chain() {
        let c = reference_link(200.0, 2);
        assert_relative_eq!(avg_time(&c).unwrap(), two_link_time(&c.link, c.p_en, 1.0).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn direct_transmission_values() {
        assert_eq!(direct_transmission_rate(0.0, 1e9, 22.0), 1e9);
        assert_relative_eq!(direct_transmission_rate(22.0 * 10f64.ln(), 1e9, 22.0), 1e8, max_relative = 1e-12);
    }

    #[test]
    fn crossover_exists_for_eight_links() {
        let p = er167_yso();
        let mut link = p.link;
        link.l0_km = 10.0;
        let spec = ChainSpec {
            links: 8,
            link,
            rates: p.rates().unwrap(),
            scheme: SchemeKind::ExchangeDeterministic,
            fidelities: ComponentFidelities::perfect(),
            scheduling: Scheduling::Parallel,
        };
        let rep = |l: f64| evaluate_chain(&spec.at_distance(l)).map(|r| r.rate);
        let direct = |l: f64| Ok(direct_transmission_rate(l, 1e9, 22.0));
        let x = crossover_distance(rep, direct, 1.0, 1000.0, 1000).unwrap().unwrap();
        assert!(x > 1.0 && x < 1000.0);
        assert!(rep(x + 1.0).unwrap() > direct(x + 1.0).unwrap());
        assert!(rep(x - 1.0).unwrap() < direct(x - 1.0).unwrap());
    }

    #[test]
    fn link_length_must_match() {
        let mut c = reference_link(300.0, 8);
        c.link = LinkParams::new(40.0);
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn fidelity_monotone_in_components(
            base in proptest::array::uniform4(0.8f64..1.0),
            bump in 0usize..4,
            frac in 0.0f64..1.0,
            m in 1u32..6,
            hybrid in any::<bool>(),
        ) {
            let links = 1 << m;
            let mut c = reference_link(50.0 * links as f64, links);
            c.scheme = if hybrid { SchemeKind::ErEuHybrid { f_gate: base[2], p_gate: 0.5 } } else { SchemeKind::DipoleDipole };
            c.fidelities = ComponentFidelities { init: base[0], entangle: base[1], gate: base[2], readout: base[3] };
            let f0 = end_to_end_fidelity(&c).unwrap();
            let mut better = c.clone();
            let fields = [&mut better.fidelities.init, &mut better.fidelities.entangle, &mut better.fidelities.gate, &mut better.fidelities.readout];
            let slot = fields.into_iter().nth(bump).unwrap();
            *slot += (1.0 - *slot) * frac;
            if let SchemeKind::ErEuHybrid { ref mut f_gate, .. } = better.scheme { *f_gate = better.fidelities.gate; }
            prop_assert!(end_to_end_fidelity(&better).unwrap() >= f0);
        }

        #[test]
        fn time_decreasing_in_probabilities(p in 0.001f64..0.5, ps in 0.5f64..0.99, m in 2u32..6) {
            let links = 1 << m;
            let mut c = reference_link(40.0 * links as f64, links);
            c.p_en = p;
            c.scheme = SchemeKind::ExchangePostselected { p_gate: ps };
            let t = avg_time(&c).unwrap();
            let mut d = c.clone();
            d.p_en = p * 1.01;
            prop_assert!(avg_time(&d).unwrap() < t);
            let mut e = c.clone();
            e.scheme = SchemeKind::ExchangePostselected { p_gate: ps + 0.005 };
            prop_assert!(avg_time(&e).unwrap() < t);
            let mut s = c.clone();
            s.scheduling = Scheduling::Sequential;
            prop_assert!(avg_time(&s).unwrap() >= t);
        }
    }
}
