//! The heralded phase-flip gate: π pulse on the control, dispersive evolution
//! with the cavity monitored for leaked photons, π pulse back.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::linalg::{CMat, C};
use super::model::{build_hamiltonian_with, build_liouvillian, Couplings, Frame, HamiltonianTerms, LiouvillianOptions};
use super::propagate::{conditional_generator, Propagator};
use super::space::{CompositeSpace, IonLabel, Level};
use super::state::DensityOperator;
use crate::error::{positive, unit_interval, Error, Result};
use crate::params::{CavityParams, IonParams};
use crate::presets::Preset;
use crate::Real;

/// Photon-number population at the cutoff above which a run is flagged.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Two ions, one cavity and the dissipator options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateModel<T> {
    pub space: CompositeSpace,
    pub ions: [IonParams<T>; 2],
    pub cavity: CavityParams<T>,
    pub options: LiouvillianOptions<T>,
}

/// Dimensionless parameters with κ = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaUnits<T> {
    pub g_over_kappa: T,
    pub gamma_over_kappa: T,
    pub gamma_star_over_kappa: T,
    pub delta_eg_over_kappa: T,
    pub n_max: usize,
}

impl<T: Real> KappaUnits<T> {
    /// γ chosen so that 4g²/(κγ) equals `cooperativity` exactly.
    pub fn from_cooperativity(g_over_kappa: T, cooperativity: T, gamma_star_over_gamma: T) -> Self {
        let gamma = T::lit(4.0) * g_over_kappa * g_over_kappa / cooperativity;
        Self {
            g_over_kappa,
            gamma_over_kappa: gamma,
            gamma_star_over_kappa: gamma_star_over_gamma * gamma,
            delta_eg_over_kappa: T::lit(100.0 / 16.0),
            n_max: 2,
        }
    }

    pub fn cooperativity(&self) -> T {
        T::lit(4.0) * self.g_over_kappa * self.g_over_kappa / self.gamma_over_kappa
    }
}

impl KappaUnits<f64> {
    /// Rates of a physical preset divided by its κ, with the given g/κ.
    pub fn from_preset(preset: &Preset, g_over_kappa: f64) -> Self {
        let k = preset.cavity.kappa;
        Self {
            g_over_kappa,
            gamma_over_kappa: preset.ion.gamma() / k,
            gamma_star_over_kappa: preset.ion.gamma_star / k,
            delta_eg_over_kappa: preset.ion.delta_eg / k,
            n_max: preset.cavity.n_max,
        }
    }
}

impl<T: Real> GateModel<T> {
    pub fn new(ions: [IonParams<T>; 2], cavity: CavityParams<T>, options: LiouvillianOptions<T>) -> Result<Self> {
        Ok(Self {
            space: CompositeSpace::new(cavity.n_max)?,
            ions,
            cavity,
            options,
        })
    }

    pub fn kappa_units(p: &KappaUnits<T>, options: LiouvillianOptions<T>) -> Result<Self> {
        positive("g_over_kappa", p.g_over_kappa)?;
        positive("gamma_over_kappa", p.gamma_over_kappa)?;
        let ion = IonParams {
            gamma_r: p.gamma_over_kappa,
            gamma_nr: T::zero(),
            gamma_star: p.gamma_star_over_kappa,
            chi: T::zero(),
            beta: T::one(),
            omega_g: T::zero(),
            delta_eg: p.delta_eg_over_kappa,
        };
        ion.validate()?;
        let cavity = CavityParams {
            g: p.g_over_kappa,
            kappa: T::one(),
            delta: T::zero(),
            optical_frequency: None,
            n_max: p.n_max,
        };
        Self::new([ion, ion], cavity, options)
    }

    /// Same model with a different Fock cutoff.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        let mut m = self.clone();
        m.cavity.n_max = n_max;
        m.space = CompositeSpace::new(n_max)?;
        Ok(m)
    }

    /// C = 4g²/(κγ) for ion A.
    pub fn cooperativity(&self) -> T {
        T::lit(4.0) * self.cavity.g * self.cavity.g / (self.cavity.kappa * self.ions[0].gamma())
    }

    /// Default gate duration πΔ/g².
    pub fn gate_time(&self, delta: T) -> T {
        T::PI() * delta / (self.cavity.g * self.cavity.g)
    }
}

/// Two-qubit input used to score the gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputState<T> {
    /// (|↑⟩+|↓⟩)(|↑⟩+|↓⟩)/2.
    Uniform,
    /// Average over the 16 products of {↑, ↓, (↑+↓)/√2, (↑+i↓)/√2}.
    BasisAverage,
    /// Product state with amplitudes on (↑, ↓) for ions A and B.
    Product { a: [C<T>; 2], b: [C<T>; 2] },
}

impl<T: Real> InputState<T> {
    fn qubit_vectors(&self) -> Vec<[C<T>; 4]> {
        let prod = |a: [C<T>; 2], b: [C<T>; 2]| [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let z = T::zero();
        let up = [C::new(T::one(), z), C::new(z, z)];
        let plus = [C::new(h, z), C::new(h, z)];
        match self {
            InputState::Uniform => vec![prod(plus, plus)],
            InputState::BasisAverage => {
                let down = [C::new(z, z), C::new(T::one(), z)];
                let plus_i = [C::new(h, z), C::new(z, h)];
                let set = [up, down, plus, plus_i];
                set.iter().flat_map(|&a| set.iter().map(move |&b| prod(a, b))).collect()
            }
            InputState::Product { a, b } => {
                let norm = |v: &[C<T>; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                let (na, nb) = (norm(a), norm(b));
                vec![prod(a.map(|x| x / na), b.map(|x| x / nb))]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateProtocol<T> {
    /// Cavity detuning Δ of the ↑–e transitions.
    pub delta: T,
    /// Probability pη_d that a cavity photon is detected.
    pub p_eta_d: T,
    /// Evolution time; defaults to πΔ/g².
    pub gate_time: Option<T>,
    pub input: InputState<T>,
    /// Per-transition couplings; defaults to the cavity g everywhere.
    pub couplings: Option<Couplings<T>>,
    /// Extra detuning of ion B's transitions.
    pub delta_w: T,
    /// Apply the π pulses on ion A; off gives the bare free evolution.
    pub pulses: bool,
}

impl<T: Real> GateProtocol<T> {
    pub fn new(delta: T, p_eta_d: T) -> Self {
        Self {
            delta,
            p_eta_d,
            gate_time: None,
            input: InputState::Uniform,
            couplings: None,
            delta_w: T::zero(),
            pulses: true,
        }
    }

    fn validate(&self) -> Result<()> {
        unit_interval("p_eta_d", self.p_eta_d)?;
        if !self.delta.is_finite() {
            return Err(Error::Invalid("detuning must be finite".into()));
        }
        if let Some(t) = self.gate_time {
            positive("gate_time", t)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// ↑ ↔ e
    UpE,
    /// ↓ ↔ e′
    DownEPrime,
}

/// Instantaneous ideal π pulse swapping the two levels of `transition` on
/// one ion.
pub fn apply_pi_pulse<T: Real>(rho: &DensityOperator<T>, ion: IonLabel, transition: Transition) -> DensityOperator<T> {
    let s = rho.space;
    let (x, y) = match transition {
        Transition::UpE => (Level::Up, Level::E),
        Transition::DownEPrime => (Level::Down, Level::EPrime),
    };
    let swap = |l: Level| {
        if l == x {
            y
        } else if l == y {
            x
        } else {
            l
        }
    };
    let perm: Vec<usize> = (0..s.dim())
        .map(|i| {
            let (a, b, n) = s.decompose(i);
            match ion {
                IonLabel::A => s.index(swap(a), b, n),
                IonLabel::B => s.index(a, swap(b), n),
            }
        })
        .collect();
    let m = &rho.matrix;
    DensityOperator {
        space: s,
        matrix: CMat::from_fn(s.dim(), |i, j| m[(perm[i], perm[j])]),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSimResult<T> {
    pub delta: T,
    pub p_eta_d: T,
    pub gate_time: T,
    /// Overlap with the ideal phase-flip output, maximized over local Z
    /// rotations and averaged over the input set.
    pub fidelity: T,
    /// Trace of the conditional state (mean over the input set).
    pub p_gate: T,
    /// Success probability with the control excited, input |↑⟩(|↑⟩+|↓⟩)/√2.
    pub p_gate_control_excited: T,
    /// Local phases (on ↑ of ion A and of ion B) applied to the ideal gate.
    pub local_phases: [T; 2],
    /// Largest population in the top Fock state at the end of the evolution.
    pub cutoff_population: T,
    pub truncation_warning: bool,
    /// Population outside the qubit subspace after the final pulse, relative
    /// to p_gate.
    pub leakage: T,
    /// Unnormalized conditional state for the first input.
    pub final_state: DensityOperator<T>,
}

/// Ideal gate: sign flip on |↑↑⟩.
fn ideal<T: Real>(psi: &[C<T>; 4]) -> [C<T>; 4] {
    [-psi[0], psi[1], psi[2], psi[3]]
}

fn phased<T: Real>(t: &[C<T>; 4], a: T, b: T) -> [C<T>; 4] {
    let e = |x: T| C::new(x.cos(), x.sin());
    [t[0] * e(a + b), t[1] * e(a), t[2] * e(b), t[3]]
}

fn overlap<T: Real>(q: &CMat<T>, t: &[C<T>; 4]) -> T {
    let mut s = C::zero();
    for i in 0..4 {
        for j in 0..4 {
            s = s + t[i].conj() * q[(i, j)] * t[j];
        }
    }
    s.re
}

/// z with Σ_k t†qt = K + 2Re(e^{iθ}z) as a function of the phase θ carried
/// by the components in `moving`.
fn phase_coefficient<T: Real>(pairs: &[(CMat<T>, [C<T>; 4])], a: T, b: T, moving: [usize; 2]) -> C<T> {
    let mut z = C::zero();
    for (q, target) in pairs {
        let t = phased(target, a, b);
        for i in 0..4 {
            for j in 0..4 {
                let fixed_i = !moving.contains(&i);
                if fixed_i && moving.contains(&j) {
                    z = z + t[i].conj() * q[(i, j)] * t[j];
                }
            }
        }
    }
    z
}

/// Maximizes the mean overlap over local phases by exact coordinate ascent.
fn optimize_phases<T: Real>(pairs: &[(CMat<T>, [C<T>; 4])]) -> (T, [T; 2]) {
    let score = |a: T, b: T| pairs.iter().map(|(q, t)| overlap(q, &phased(t, a, b))).sum::<T>() / T::lit(pairs.len() as f64);
    let mut best = (T::neg_infinity(), [T::zero(); 2]);
    let h = T::FRAC_PI_2();
    for sa in 0..4 {
        for sb in 0..4 {
            let (mut a, mut b) = (h * T::lit(sa as f64), h * T::lit(sb as f64));
            let mut f = score(a, b);
            for _ in 0..200 {
                // θ multiplies components {0, 1} for a and {0, 2} for b; the
                // coefficient is taken with that phase removed
                let za = phase_coefficient(pairs, T::zero(), b, [0, 1]);
                a = -za.arg();
                let zb = phase_coefficient(pairs, a, T::zero(), [0, 2]);
                b = -zb.arg();
                let next = score(a, b);
                let done = (next - f).abs() <= T::epsilon() * T::lit(4.0);
                f = next;
                if done {
                    break;
                }
            }
            if f > best.0 {
                best = (f, [a, b]);
            }
        }
    }
    best
}

fn embed<T: Real>(space: &CompositeSpace, q: &[C<T>; 4]) -> Vec<C<T>> {
    let mut psi = vec![C::zero(); space.dim()];
    let labels = [
        (Level::Up, Level::Up),
        (Level::Up, Level::Down),
        (Level::Down, Level::Up),
        (Level::Down, Level::Down),
    ];
    for (k, &(a, b)) in labels.iter().enumerate() {
        psi[space.index(a, b, 0)] = q[k];
    }
    psi
}

/// Runs the gate sequence and scores it.
pub fn run_cz_protocol<T: Real>(model: &GateModel<T>, protocol: &GateProtocol<T>) -> Result<GateSimResult<T>> {
    protocol.validate()?;
    let space = model.space;
    let g = model.cavity.g;
    let gate_time = match protocol.gate_time {
        Some(t) => t,
        None => {
            positive("g", g)?;
            positive("delta", protocol.delta)?;
            model.gate_time(protocol.delta)
        }
    };
    let terms = HamiltonianTerms {
        detuning: [protocol.delta, protocol.delta + protocol.delta_w],
        couplings: protocol.couplings.unwrap_or_else(|| Couplings::uniform(g)),
        frame: Frame::CavityRotating,
    };
    let ions = [&model.ions[0], &model.ions[1]];
    let h = build_hamiltonian_with(&space, ions, &model.cavity, &terms)?;
    let l = build_liouvillian(&space, &h, ions, &model.cavity, &model.options)?;
    let gen = conditional_generator(&l, protocol.p_eta_d, model.cavity.kappa)?;
    let prop = Propagator::new(&gen);

    let run = |q: &[C<T>; 4]| -> Result<(DensityOperator<T>, T)> {
        let mut rho = DensityOperator::pure(space, &embed(&space, q))?;
        if protocol.pulses {
            rho = apply_pi_pulse(&rho, IonLabel::A, Transition::UpE);
        }
        rho = prop.propagate(&rho, gate_time)?;
        let cutoff = rho.photon_distribution()[space.n_max()];
        if protocol.pulses {
            rho = apply_pi_pulse(&rho, IonLabel::A, Transition::UpE);
        }
        Ok((rho, cutoff))
    };

    let inputs = protocol.input.qubit_vectors();
    let mut pairs = Vec::with_capacity(inputs.len());
    let mut p_sum = T::zero();
    let mut leak_sum = T::zero();
    let mut cutoff = T::zero();
    let mut first = None;
    for q in &inputs {
        let (rho, c) = run(q)?;
        let p = rho.trace();
        if !(p > T::zero()) {
            return Err(Error::Propagation("conditional state has vanishing trace".into()));
        }
        let block = rho.qubit_block();
        leak_sum = leak_sum + (p - block.trace().re) / p;
        p_sum = p_sum + p;
        cutoff = cutoff.max(c);
        pairs.push((block.scale(C::new(p.recip(), T::zero())), ideal(q)));
        if first.is_none() {
            first = Some(rho);
        }
    }
    let n = T::lit(inputs.len() as f64);
    let (fidelity, phases) = optimize_phases(&pairs);

    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let z = T::zero();
    let excited_input = [C::new(h, z), C::new(h, z), C::new(z, z), C::new(z, z)];
    let (rho_e, _) = run(&excited_input)?;

    Ok(GateSimResult {
        delta: protocol.delta,
        p_eta_d: protocol.p_eta_d,
        gate_time,
        fidelity,
        p_gate: p_sum / n,
        p_gate_control_excited: rho_e.trace(),
        local_phases: phases,
        cutoff_population: cutoff,
        truncation_warning: cutoff > T::lit(TRUNCATION_THRESHOLD),
        leakage: leak_sum / n,
        final_state: first.expect("at least one input"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::model::{build_hamiltonian, build_liouvillian};
    use crate::lindblad::propagate::conditional_propagate;
    use proptest::prelude::*;

    fn fig4(gs_ratio: f64) -> GateModel<f64> {
        GateModel::kappa_units(
            &KappaUnits::from_cooperativity(0.1, 9e4, gs_ratio),
            LiouvillianOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn pulse_twice_is_identity_and_moves_population() {
        let s = CompositeSpace::new(2).unwrap();
        let r = DensityOperator::<f64>::basis(s, Level::Up, Level::Up, 0);
        let once = apply_pi_pulse(&r, IonLabel::A, Transition::UpE);
        assert_eq!(once.population(Level::E, Level::Up, 0), 1.0);
        let twice = apply_pi_pulse(&once, IonLabel::A, Transition::UpE);
        assert_eq!(twice, r);
        let b = apply_pi_pulse(&r, IonLabel::B, Transition::DownEPrime);
        assert_eq!(b, r);
    }

    #[test]
    fn pulse_commutes_with_other_ion_operators() {
        let s = CompositeSpace::new(1).unwrap();
        let psi: Vec<C<f64>> = (0..s.dim()).map(|i| C::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let r = DensityOperator::pure(s, &psi).unwrap();
        let x = apply_pi_pulse(&apply_pi_pulse(&r, IonLabel::A, Transition::UpE), IonLabel::B, Transition::DownEPrime);
        let y = apply_pi_pulse(&apply_pi_pulse(&r, IonLabel::B, Transition::DownEPrime), IonLabel::A, Transition::UpE);
        assert_eq!(x, y);
        assert!((x.trace() - r.trace()).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_input_is_untouched() {
        let m = fig4(2.3);
        let z = C::new(0.0, 0.0);
        let o = C::new(1.0, 0.0);
        let mut p = GateProtocol::new(50.0, 1.0);
        p.input = InputState::Product { a: [z, o], b: [z, o] };
        p.pulses = false;
        let r = run_cz_protocol(&m, &p).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-6);
        assert!((r.p_gate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unmonitored_gate_succeeds_with_certainty() {
        let r = run_cz_protocol(&fig4(2.3), &GateProtocol::new(90.0, 0.0)).unwrap();
        assert!((r.p_gate - 1.0).abs() < 1e-6);
        assert!((r.p_gate_control_excited - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dispersive_phase_matches_perturbation_theory() {
        // single coupled ion, no loss: |e⟩ picks up g²t/Δ relative to |↑⟩
        let s = CompositeSpace::new(2).unwrap();
        let g = 0.02;
        let ion = IonParams {
            gamma_r: 0.0,
            gamma_nr: 0.0,
            gamma_star: 0.0,
            chi: 0.0,
            beta: 1.0,
            omega_g: 0.0,
            delta_eg: 5.0,
        };
        for ratio in [50.0, 100.0] {
            let delta = ratio * g;
            let cav = CavityParams {
                g,
                kappa: 0.0,
                delta,
                optical_frequency: None,
                n_max: 2,
            };
            let terms = HamiltonianTerms {
                detuning: [delta; 2],
                couplings: Couplings { up: [g, 0.0], down: [0.0; 2] },
                frame: Frame::CavityRotating,
            };
            let h = build_hamiltonian_with(&s, [&ion, &ion], &cav, &terms).unwrap();
            let l = build_liouvillian(&s, &h, [&ion, &ion], &cav, &LiouvillianOptions::default()).unwrap();
            let mut psi = vec![C::new(0.0, 0.0); s.dim()];
            let up = s.index(Level::Up, Level::Down, 0);
            let e = s.index(Level::E, Level::Down, 0);
            psi[up] = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            psi[e] = psi[up];
            let r = DensityOperator::pure(s, &psi).unwrap();
            let t = 20.0 * delta / (g * g);
            let out = conditional_propagate(&l, 0.0, 0.0, &r, t).unwrap();
            // ρ_{↑e} ∝ e^{+i(Δ+δ)t}; remove the bare Δt
            let phase = (out.matrix[(up, e)] * C::new(0.0, -delta * t).exp()).arg();
            let want = g * g * t / delta;
            let wrapped = (phase - want).rem_euclid(std::f64::consts::TAU);
            let err = wrapped.min(std::f64::consts::TAU - wrapped);
            assert!(err < 0.01 * want, "ratio {ratio}: phase {phase} vs {want}");
            let _ = build_hamiltonian(&s, &ion, &ion, &cav, Frame::CavityRotating).unwrap();
        }
    }

    #[test]
    fn basis_average_mode_runs() {
        let mut p = GateProtocol::new(90.0, 0.0);
        p.input = InputState::BasisAverage;
        let r = run_cz_protocol(&fig4(2.3), &p).unwrap();
        let u = run_cz_protocol(&fig4(2.3), &GateProtocol::new(90.0, 0.0)).unwrap();
        assert!(r.fidelity > 0.9 && r.fidelity <= 1.0 + 1e-12);
        assert!((r.fidelity - u.fidelity).abs() < 0.05);
    }

    #[test]
    fn ideal_limit_is_perfect_phase_flip() {
        // no dissipation and a long dispersive gate approach the ideal gate
        let m = GateModel::kappa_units(
            &KappaUnits {
                g_over_kappa: 0.1,
                gamma_over_kappa: 1e-12,
                gamma_star_over_kappa: 0.0,
                delta_eg_over_kappa: 1e6,
                n_max: 2,
            },
            LiouvillianOptions::default(),
        )
        .unwrap();
        let r = run_cz_protocol(&m, &GateProtocol::new(400.0, 0.0)).unwrap();
        assert!(r.fidelity > 0.99, "{}", r.fidelity);
    }

    #[test]
    fn rejects_bad_protocols() {
        let m = fig4(2.3);
        assert!(run_cz_protocol(&m, &GateProtocol::new(90.0, 1.5)).is_err());
        assert!(run_cz_protocol(&m, &GateProtocol::new(-3.0, 0.5)).is_err());
        let mut p = GateProtocol::new(90.0, 0.5);
        p.gate_time = Some(0.0);
        assert!(run_cz_protocol(&m, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn p_gate_is_a_probability(delta in 10.0f64..150.0, p in 0.0f64..=1.0) {
            let r = run_cz_protocol(&fig4(2.3), &GateProtocol::new(delta, p)).unwrap();
            prop_assert!(r.p_gate >= 0.0 && r.p_gate <= 1.0 + 1e-9);
            prop_assert!(r.fidelity >= 0.0 && r.fidelity <= 1.0 + 1e-9);
            prop_assert!(r.p_gate_control_excited <= r.p_gate + 1e-12);
        }
    }
}
