use eitsim::atom::{AtomSpec, CellSpec, FieldSpec, Level};
use eitsim::storage::{
    default_storage_times, lifetime_scan, predicted_lifetime, PulseSequence, StorageSimulator,
};

fn atom() -> AtomSpec {
    AtomSpec::default_rb85_d1()
}

fn coupling() -> FieldSpec {
    FieldSpec::coupling(64.0, 0.0)
}

fn probe(e: f64) -> FieldSpec {
    FieldSpec::probe(e, 0.0)
}

#[test]
fn no_ground_dephasing_no_decay() {
    let mut cell = CellSpec::paraffin();
    cell.intercept_b = 0.0;
    let sim = StorageSimulator::new(&atom(), &cell, &coupling(), &probe(3.0), PulseSequence::default()).unwrap();
    let e: Vec<f64> = [10e-6, 100e-6, 1e-3]
        .iter()
        .map(|&t| sim.retrieve(t).unwrap().efficiency)
        .collect();
    for v in &e {
        assert!((v - e[0]).abs() < 1e-6 * e[0], "{e:?}");
    }
    assert!(e[0] > 0.5);
}

#[test]
fn stored_coherence_decays_at_ground_rate() {
    for cell in [CellSpec::ne_5torr(), CellSpec::alkene(), CellSpec::paraffin()] {
        let sim = StorageSimulator::new(&atom(), &cell, &coupling(), &probe(3.0), PulseSequence::default())
            .unwrap();
        let g12 = cell.ground_dephasing();
        let t0 = 1e-6;
        let c0 = sim.retrieve(t0).unwrap().stored_coherence;
        for k in 1..5 {
            let t = t0 + k as f64 * 0.5 / g12;
            let c = sim.retrieve(t).unwrap().stored_coherence;
            let want = c0 * (-g12 * (t - t0)).exp();
            assert!((c - want).abs() < 1e-6 * want, "{:?} t = {t}: {c} vs {want}", cell.kind);
        }
    }
}

#[test]
fn written_state_is_physical() {
    let sim = StorageSimulator::new(&atom(), &CellSpec::alkene(), &coupling(), &probe(3.0), PulseSequence::default())
        .unwrap();
    let rho = sim.written_state();
    assert!((rho.trace().re - 1.0).abs() < 1e-9);
    assert!(rho.hermiticity_error() < 1e-9);
    assert!(rho.get(Level::G1, Level::G2).norm() > 1e-4);
}

#[test]
fn lifetimes_order_by_ground_dephasing() {
    let tau = |cell: &CellSpec| {
        let times = default_storage_times(cell).unwrap();
        let scan = lifetime_scan(&atom(), cell, &coupling(), &probe(3.0), PulseSequence::default(), &times).unwrap();
        let peak = scan.efficiencies.iter().cloned().fold(0.0, f64::max);
        assert!(scan.fit.rms < 0.02 * peak, "{:?}: rms {}", cell.kind, scan.fit.rms);
        assert!(scan.efficiencies.windows(2).all(|w| w[1] < w[0]));
        let t = scan.tau();
        let want = predicted_lifetime(cell).unwrap();
        assert!((t - want).abs() < 0.1 * want, "{:?}: {t} vs {want}", cell.kind);
        t
    };
    let (ne, alkene, paraffin) = (
        tau(&CellSpec::ne_5torr()),
        tau(&CellSpec::alkene()),
        tau(&CellSpec::paraffin()),
    );
    assert!(ne > alkene && alkene > paraffin, "{ne} {alkene} {paraffin}");
}

#[test]
fn weak_probe_efficiency_is_amplitude_independent() {
    let cell = CellSpec::paraffin();
    let t = predicted_lifetime(&cell).unwrap();
    let eff = |e: f64| {
        StorageSimulator::new(&atom(), &cell, &coupling(), &probe(e), PulseSequence::default())
            .unwrap()
            .retrieve(t)
            .unwrap()
            .efficiency
    };
    let (a, b) = (eff(1.5), eff(3.0));
    assert!((a - b).abs() < 1e-3 * b, "{a} vs {b}");
}

#[test]
fn zero_storage_time_is_the_reference() {
    let sim = StorageSimulator::new(&atom(), &CellSpec::ne_5torr(), &coupling(), &probe(3.0), PulseSequence::default())
        .unwrap();
    let r = sim.retrieve(0.0).unwrap();
    assert_eq!(r.efficiency, 1.0);
    assert_eq!(r.times.len(), PulseSequence::default().retrieval_samples);
    assert!(sim.retrieve(-1e-6).is_err());
}
