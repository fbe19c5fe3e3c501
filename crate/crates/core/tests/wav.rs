use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gabor_stretch::wav::{read_wav, write_wav, SampleFormat, WavAudio};

fn random_audio(format: SampleFormat, channels: usize, frames: usize, seed: u64) -> WavAudio {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> f64 {
        match format {
            SampleFormat::Pcm16 => rng.gen_range(-32768i32..32768) as f64 / 32768.0,
            SampleFormat::Pcm24 => rng.gen_range(-(1i32 << 23)..(1 << 23)) as f64 / (1u32 << 23) as f64,
            SampleFormat::Float32 => rng.gen_range(-1.5f32..1.5) as f64,
        }
    };
    WavAudio {
        channels: (0..channels)
            .map(|_| (0..frames).map(|_| sample(&mut rng)).collect())
            .collect(),
        sample_rate: 44_100,
        format,
    }
}

#[test]
fn round_trips_are_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for (i, format) in [SampleFormat::Pcm16, SampleFormat::Pcm24, SampleFormat::Float32]
        .into_iter()
        .enumerate()
    {
        for channels in [1, 2, 3] {
            let audio = random_audio(format, channels, 1000, i as u64 * 10 + channels as u64);
            let path = dir.path().join(format!("{i}_{channels}.wav"));
            let clipped = write_wav(&path, &audio).unwrap();
            // Float output is never clipped.
            if format == SampleFormat::Float32 {
                assert_eq!(clipped, 0);
            }
            assert_eq!(read_wav(&path).unwrap(), audio, "{format:?} x{channels}");
        }
    }
}

#[test]
fn integer_output_is_clamped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.wav");
    let audio = WavAudio {
        channels: vec![vec![0.0, 1.0, -1.0, 2.0, -3.0, 0.5]],
        sample_rate: 8000,
        format: SampleFormat::Pcm16,
    };
    // +1.0 is one step past the largest positive code.
    assert_eq!(write_wav(&path, &audio).unwrap(), 3);
    let back = read_wav(&path).unwrap();
    assert_eq!(
        back.channels[0],
        vec![0.0, 32767.0 / 32768.0, -1.0, 32767.0 / 32768.0, -1.0, 0.5]
    );
}

#[test]
fn unsupported_and_malformed_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u8.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 8000,
        bits_per_sample: 8,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&path, spec).unwrap();
    w.write_sample(3i8).unwrap();
    w.finalize().unwrap();
    assert!(read_wav(&path).is_err());

    let junk = dir.path().join("junk.wav");
    std::fs::write(&junk, b"not a riff file").unwrap();
    assert!(read_wav(&junk).is_err());
    assert!(read_wav(dir.path().join("missing.wav")).is_err());

    let ragged = WavAudio {
        channels: vec![vec![0.0; 3], vec![0.0; 2]],
        sample_rate: 8000,
        format: SampleFormat::Pcm24,
    };
    assert!(write_wav(dir.path().join("r.wav"), &ragged).is_err());
    let empty = WavAudio {
        channels: vec![],
        sample_rate: 8000,
        format: SampleFormat::Pcm16,
    };
    assert!(write_wav(dir.path().join("e.wav"), &empty).is_err());
}
