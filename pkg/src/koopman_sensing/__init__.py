"""Hankel-DMD system identification and rolling-horizon virtual sensing."""

from ._backend import BACKEND
from .embedding import HankelPair, build_hankel, embed_window
from .koopman import (HankelSVD, KoopmanModel, ModalParameterSet, classify_stability,
                      continuous_spectrum, fit, load_model, reconstruct, save_model, select_rank,
                      temporal_dynamics)
from .metrics import LyapunovEstimate, ModeMatchResult, lyapunov_max, mac, match_modes, nrmse, r2
from .preprocessing import (FilterSpec, NormalizationParams, TimeSeriesMatrix, bandpass_zero_phase,
                            zscore_apply, zscore_fit, zscore_invert)
from .sensing import (ReconstructionReport, RollingConfig, SensorMask, calibrate, propagate,
                      rolling_reconstruct, sparse_basis)
from .synth import SyntheticPlantSpec, SyntheticTruth, fowt_like_preset, generate

__version__ = "0.1.0"
