use proptest::prelude::*;
use tunnel_blimp::telemetry::{
    decode_ack, decode_command, deserialize_frame, encode_ack, encode_command, serialize_frame, CodecError, Command,
    CommandKind, FramePoint, SituationalFrame, COMMAND_BYTES, MAX_FRAME_BYTES,
};
use tunnel_blimp::ModeKind;

const FOV: f64 = std::f64::consts::FRAC_PI_2;

fn frame_strategy() -> impl Strategy<Value = SituationalFrame> {
    let points = proptest::collection::btree_map(0u8..8, (0.0f64..81.9, -1.0f64..1.0), 0..=8);
    (
        any::<u16>(),
        points,
        0.0f64..600.0,
        0usize..5,
        -300.0f64..300.0,
        -300.0f64..300.0,
    )
        .prop_map(|(seq, points, altitude, mode, nav_d, nav_phi)| SituationalFrame {
            seq,
            timestamp: 0.0,
            points: points
                .into_iter()
                .map(|(bin_index, (range, b))| FramePoint {
                    bin_index,
                    range,
                    bearing: b * FOV / 2.0,
                })
                .collect(),
            altitude,
            mode: [
                ModeKind::Auto,
                ModeKind::Degraded,
                ModeKind::Stuck,
                ModeKind::Teleop,
                ModeKind::Idle,
            ][mode],
            nav_d,
            nav_phi,
        })
}

proptest! {
    #[test]
    fn frames_round_trip_within_quantization(frame in frame_strategy()) {
        let wire = serialize_frame(&frame, FOV).unwrap();
        prop_assert!(wire.len() <= MAX_FRAME_BYTES);
        prop_assert_eq!(wire.len(), frame.wire_size());
        let back = deserialize_frame(&wire, FOV).unwrap();
        prop_assert_eq!(back.seq, frame.seq);
        prop_assert_eq!(back.mode, frame.mode);
        prop_assert!((back.altitude - frame.altitude).abs() <= 0.005 + 1e-9);
        prop_assert!((back.nav_d - frame.nav_d).abs() <= 0.005 + 1e-9);
        prop_assert!((back.nav_phi - frame.nav_phi).abs() <= 0.005 + 1e-9);
        for (b, f) in back.points.iter().zip(&frame.points) {
            prop_assert_eq!(b.bin_index, f.bin_index);
            prop_assert!((b.range - f.range).abs() <= 0.005 + 1e-9);
            prop_assert!((b.bearing - f.bearing).abs() <= FOV / 256.0);
        }
        // Re-encoding the decoded frame is a fixed point.
        prop_assert_eq!(serialize_frame(&back, FOV).unwrap(), wire);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..48)) {
        let _ = deserialize_frame(&bytes, FOV);
        let _ = decode_command(&bytes);
        let _ = decode_ack(&bytes);
    }

    #[test]
    fn commands_round_trip(seq in any::<u16>(), kind in 0usize..8, magnitude in 0.01f64..=1.0, duration in 0.0f64..=10.0) {
        let cmd = Command { seq, kind: CommandKind::ALL[kind], magnitude, duration };
        let wire = encode_command(&cmd).unwrap();
        prop_assert_eq!(wire.len(), COMMAND_BYTES);
        let back = decode_command(&wire).unwrap();
        prop_assert_eq!(back.seq, seq);
        prop_assert_eq!(back.kind, cmd.kind);
        prop_assert!((back.magnitude - magnitude).abs() <= 0.5 / 255.0 + 1e-9);
        prop_assert!((back.duration - duration).abs() <= 0.05 + 1e-9);
    }
}

#[test]
fn malformed_frames_are_rejected() {
    let frame = SituationalFrame {
        seq: 1,
        timestamp: 0.0,
        points: vec![FramePoint {
            bin_index: 3,
            range: 2.0,
            bearing: 0.0,
        }],
        altitude: 0.6,
        mode: ModeKind::Auto,
        nav_d: 0.0,
        nav_phi: 0.0,
    };
    let wire = serialize_frame(&frame, FOV).unwrap();
    assert!(matches!(
        deserialize_frame(&wire[..wire.len() - 1], FOV),
        Err(CodecError::Truncated(_))
    ));
    let mut bad = wire.clone();
    bad[0] ^= 0xFF;
    assert!(matches!(deserialize_frame(&bad, FOV), Err(CodecError::BadMagic(_))));

    let doubled = SituationalFrame {
        points: vec![frame.points[0], frame.points[0]],
        ..frame.clone()
    };
    assert!(matches!(serialize_frame(&doubled, FOV), Err(CodecError::BadBin(3))));
    let far = SituationalFrame {
        points: vec![FramePoint {
            range: 90.0,
            ..frame.points[0]
        }],
        ..frame
    };
    assert!(matches!(serialize_frame(&far, FOV), Err(CodecError::OutOfRange { .. })));
}

#[test]
fn acks_round_trip() {
    assert_eq!(decode_ack(&encode_ack(513)).unwrap(), 513);
    assert!(decode_ack(&[0, 1]).is_err());
}
