//! Time-domain signals and log-mel band energy (LMBE) feature extraction.

mod lmbe;
mod mel;
mod signal;
mod stft;

pub use lmbe::{lmbe, LmbeConfig, LmbeExtractor, LmbeMatrix, DEFAULT_ENERGY_FLOOR};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use signal::{read_wav, write_wav, AudioSignal, DEFAULT_SAMPLE_RATE};
pub use stft::{hann_window, seconds_to_samples, stft_power, PowerSpectrogram, Stft};
