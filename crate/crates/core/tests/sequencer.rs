use proptest::prelude::*;
use qfsim_core::channel::{blob_model, ReadoutChannel};
use qfsim_core::demod::demodulate;
use qfsim_core::discriminate::{discriminant_error_rates, separation_for_error, train_lda_with, InterceptMode};
use qfsim_core::physics::transition_matrix;
use qfsim_core::sequencer::{active_reset_program, readout_pulse, validate, Channel, OpKind, ShotEngine, Timed};
use qfsim_core::{
    BlobModel, ChannelConfig, DemodConfig, Discriminant, Instruction, LatencyModel, QubitParams, QubitState, RngStream,
};

struct Setup {
    qubit: QubitParams,
    channel: ChannelConfig,
    demod: DemodConfig,
    disc: Discriminant<f64>,
    blobs: BlobModel<f64>,
}

fn setup(qubit: QubitParams) -> Setup {
    let demod = DemodConfig::baseline().with_delay(17);
    let pulse = readout_pulse(&demod, 1.0);
    let channel = ChannelConfig { cable_delay: 17, ..ChannelConfig::baseline_geometry() }
        .with_separation(separation_for_error(0.005).unwrap(), &pulse, &demod)
        .unwrap();
    let chan = ReadoutChannel::<f64>::new(&channel, &pulse).unwrap();
    let mut rng = RngStream::new(1, 1 << 40);
    let training: Vec<_> = (0..20_000)
        .map(|k| {
            let s = if k % 2 == 0 { QubitState::Ground } else { QubitState::Excited };
            (demodulate(&chan.shot(s, &mut rng), &demod).unwrap(), s)
        })
        .collect();
    let disc = train_lda_with(&training, InterceptMode::Prior(qubit.p1_eq)).unwrap();
    let blobs = blob_model(&channel, &pulse, &demod).unwrap();
    Setup { qubit, channel, demod, disc, blobs }
}

/// Closed-form probability that the qubit is excited at the end of the reset
/// program, summed over initial state, decision and pi-pulse outcome.
#[allow(clippy::needless_range_loop)]
fn reset_oracle(q: &QubitParams, g_as_e: f64, e_as_g: f64, window: f64, latency: f64) -> f64 {
    let w = transition_matrix(window, q).unwrap();
    let l = transition_matrix(latency, q).unwrap();
    let p = transition_matrix(q.pi_duration, q).unwrap();
    let mut excited = 0.0;
    for s0 in 0..2 {
        let p0 = if s0 == 1 { q.p1_eq } else { 1.0 - q.p1_eq };
        let p_decide_e = if s0 == 1 { 1.0 - e_as_g } else { g_as_e };
        for s1 in 0..2 {
            for s2 in 0..2 {
                let reach = p0 * w[s0][s1] * l[s1][s2];
                // decided ground: nothing is played
                excited += reach * (1.0 - p_decide_e) * (s2 == 1) as u8 as f64;
                // decided excited: pi pulse then its duration
                let flipped = 1 - s2;
                let after_pi = (1.0 - q.pi_error) * p[flipped][1] + q.pi_error * p[s2][1];
                excited += reach * p_decide_e * after_pi;
            }
        }
    }
    excited
}

fn engine(s: &Setup) -> ShotEngine<f64> {
    ShotEngine::new(
        &active_reset_program(800),
        &s.qubit,
        &s.channel,
        &s.demod,
        &s.disc,
        &LatencyModel::baseline(),
    )
    .unwrap()
}

#[test]
fn monte_carlo_matches_path_enumeration() {
    for qubit in [QubitParams::baseline(), QubitParams { pi_error: 0.2, t1: 5e-6, ..QubitParams::baseline() }] {
        let s = setup(qubit);
        let e = engine(&s);
        let (g_as_e, e_as_g) = discriminant_error_rates(&s.disc, &s.blobs);
        let expected = reset_oracle(&s.qubit, g_as_e, e_as_g, 800e-9, 428e-9);
        let n = 200_000;
        let excited = (0..n as u64)
            .filter(|&k| e.run(&mut RngStream::new(2, k)).unwrap().final_state.is_excited())
            .count();
        let sd = (n as f64 * expected * (1.0 - expected)).sqrt();
        assert!(
            (excited as f64 - n as f64 * expected).abs() <= 3.0 * sd,
            "{excited}/{n} vs oracle {expected}"
        );
    }
}

#[test]
fn ideal_loop_always_resets() {
    let qubit = QubitParams { t1: f64::INFINITY, pi_error: 0.0, ..QubitParams::baseline() };
    let mut s = setup(qubit);
    s.channel.noise_sigma = 0.0;
    let e = engine(&s);
    let mut saw_excited = false;
    for k in 0..2000 {
        let rec = e.run(&mut RngStream::new(3, k)).unwrap();
        assert_eq!(rec.decision, Some(rec.initial_state));
        assert_eq!(rec.pi_applied, rec.initial_state.is_excited());
        assert_eq!(rec.final_state, QubitState::Ground);
        saw_excited |= rec.initial_state.is_excited();
    }
    assert!(saw_excited);
}

#[test]
fn timelines_are_ordered_and_place_the_pi_pulse() {
    let s = setup(QubitParams::baseline());
    let e = engine(&s);
    for k in 0..500 {
        let rec = e.run(&mut RngStream::new(4, k)).unwrap();
        let mut t = 0.0;
        for ev in &rec.timeline {
            assert!(ev.start >= t - 1e-15 && ev.end >= ev.start, "{:?}", rec.timeline);
            t = ev.end;
        }
        let names: Vec<_> = rec.timeline.iter().map(|ev| ev.name).collect();
        if rec.pi_applied {
            assert_eq!(names, ["readout", "latency", "pi"]);
            let pi = rec.timeline[2];
            assert!((pi.start - 1228e-9).abs() < 1e-15 && (pi.end - 1478e-9).abs() < 1e-15);
        } else {
            assert_eq!(names, ["readout", "latency"]);
        }
    }
}

#[test]
fn identical_streams_give_identical_shots() {
    let s = setup(QubitParams::baseline());
    let e = engine(&s);
    for k in 0..200 {
        assert_eq!(e.run(&mut RngStream::new(9, k)).unwrap(), e.run(&mut RngStream::new(9, k)).unwrap());
    }
}

fn branch_gaps(ops: &[Timed], last_acquire_end: &mut Option<u64>, gaps: &mut Vec<(u64, u64)>) {
    for op in ops {
        match op {
            Timed::Op { kind: OpKind::Acquire, end_ns, .. } => *last_acquire_end = Some(*end_ns),
            Timed::Op { .. } => {}
            Timed::Branch { start_ns, if_e, if_g, .. } => {
                gaps.push((last_acquire_end.expect("branch follows an acquire"), *start_ns));
                let mut inner = *last_acquire_end;
                branch_gaps(if_e, &mut inner, gaps);
                let mut inner = *last_acquire_end;
                branch_gaps(if_g, &mut inner, gaps);
            }
        }
    }
}

fn program_strategy() -> impl Strategy<Value = Vec<Instruction>> {
    let step = prop_oneof![
        (1u64..200).prop_map(|t| Instruction::Wait { duration_ns: 2 * t }),
        Just(Instruction::Acquire { window_ns: 800 }),
        Just(Instruction::Branch { if_e: vec![Instruction::pi()], if_g: vec![] }),
        Just(Instruction::Branch {
            if_e: vec![Instruction::Wait { duration_ns: 100 }],
            if_g: vec![Instruction::pi(), Instruction::pi()],
        }),
    ];
    proptest::collection::vec(step, 0..8).prop_map(|body| {
        let mut v = vec![Instruction::Acquire { window_ns: 800 }];
        v.extend(body);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn latency_is_inserted_exactly(program in program_strategy(), optimized in any::<bool>()) {
        let latency = if optimized { LatencyModel::optimized() } else { LatencyModel::baseline() };
        let schedule = validate(&program, &latency, 250).unwrap();
        prop_assert_eq!(&schedule, &validate(&program, &latency, 250).unwrap());
        prop_assert!(schedule.check_overlaps().is_ok());
        let mut gaps = Vec::new();
        branch_gaps(&schedule.ops, &mut None, &mut gaps);
        for (acquire_end, start) in gaps {
            prop_assert!(start >= acquire_end + latency.total_ns());
        }
        // directly after an acquire the gap is exactly the latency
        for pair in schedule.ops.windows(2) {
            if let [Timed::Op { kind: OpKind::Acquire, end_ns, .. }, Timed::Branch { start_ns, .. }] = pair {
                prop_assert_eq!(*start_ns - *end_ns, latency.total_ns());
            }
        }
        for op in &schedule.ops {
            if let Timed::Op { kind: OpKind::Play { channel, .. }, .. } = op {
                prop_assert_eq!(*channel, Channel::Drive);
            }
        }
    }
}
