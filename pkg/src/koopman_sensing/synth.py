"""Synthetic structural plant with known modes.

The response is a sum of lightly damped modes, each kept alive by Poisson
distributed velocity kicks, plus persistent harmonic forcing, white
measurement noise and an optional Lorenz-63 drive.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SpecInvalid
from .preprocessing import TimeSeriesMatrix


@dataclass(frozen=True)
class ModeSpec:
    frequency_hz: float
    damping_ratio: float
    shape: tuple
    amplitude: float = 1.0


@dataclass(frozen=True)
class HarmonicSpec:
    frequency_hz: float
    amplitude: float
    profile: tuple


@dataclass(frozen=True)
class ChaoticDrive:
    """Lorenz-63 drive added to a set of channels.

    ``gain`` scales the unit-variance Lorenz ``x`` signal relative to the
    RMS of each target channel's clean modal response. ``time_scale`` is
    Lorenz time units per second.
    """

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    gain: float = 1.0
    channels: tuple = ()
    time_scale: float = 1.0
    substeps: int = 4


@dataclass(frozen=True)
class SyntheticPlantSpec:
    n_sensors: int
    modes: tuple
    harmonics: tuple = ()
    noise_std: float = 0.0
    chaotic_drive: ChaoticDrive = None
    dt: float = 0.02
    duration_s: float = 600.0
    seed: int = 0
    kick_rate_hz: float = 1.0 / 30.0
    channel_names: tuple = None
    channel_units: tuple = None

    def validate(self):
        nyq = 0.5 / self.dt if self.dt > 0 else 0.0
        if self.n_sensors < 1 or self.dt <= 0 or self.duration_s <= 2 * self.dt:
            raise SpecInvalid("need n_sensors >= 1, dt > 0 and a duration of several samples")
        if self.noise_std < 0 or self.kick_rate_hz < 0:
            raise SpecInvalid("noise_std and kick_rate_hz must be non-negative")
        for m in self.modes:
            if not 0 < m.damping_ratio < 1:
                raise SpecInvalid(f"damping ratio {m.damping_ratio} outside (0, 1)")
            if not 0 < m.frequency_hz < nyq:
                raise SpecInvalid(f"mode frequency {m.frequency_hz} Hz outside (0, {nyq})")
            if len(m.shape) != self.n_sensors or not np.any(np.asarray(m.shape) != 0):
                raise SpecInvalid("mode shapes must be nonzero with one entry per sensor")
        for h in self.harmonics:
            if not 0 < h.frequency_hz < nyq:
                raise SpecInvalid(f"harmonic frequency {h.frequency_hz} Hz outside (0, {nyq})")
            if len(h.profile) != self.n_sensors:
                raise SpecInvalid("harmonic profile needs one entry per sensor")
        if self.chaotic_drive is not None:
            c = self.chaotic_drive
            if any(not 0 <= ch < self.n_sensors for ch in c.channels):
                raise SpecInvalid("chaotic drive targets a missing channel")
            if c.substeps < 1 or c.time_scale <= 0:
                raise SpecInvalid("chaotic drive needs substeps >= 1 and time_scale > 0")
        for names in (self.channel_names, self.channel_units):
            if names is not None and len(names) != self.n_sensors:
                raise SpecInvalid("channel metadata length does not match n_sensors")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["modes"] = tuple(ModeSpec(**{**m, "shape": tuple(m["shape"])}) for m in d["modes"])
        d["harmonics"] = tuple(HarmonicSpec(**{**h, "profile": tuple(h["profile"])})
                               for h in d.get("harmonics", ()))
        if d.get("chaotic_drive") is not None:
            c = dict(d["chaotic_drive"])
            c["channels"] = tuple(c.get("channels", ()))
            d["chaotic_drive"] = ChaoticDrive(**c)
        for key in ("channel_names", "channel_units"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class SyntheticTruth:
    data: TimeSeriesMatrix
    spec: SyntheticPlantSpec
    shapes: np.ndarray = field(repr=False)
    drive: np.ndarray = field(default=None, repr=False)

    @property
    def frequencies_hz(self):
        return np.array([m.frequency_hz for m in self.spec.modes])

    @property
    def damping_ratios(self):
        return np.array([m.damping_ratio for m in self.spec.modes])

    @property
    def damped_frequencies_hz(self):
        z = self.damping_ratios
        return self.frequencies_hz * np.sqrt(1 - z ** 2)

    @property
    def harmonic_frequencies_hz(self):
        return np.array([h.frequency_hz for h in self.spec.harmonics])


def lorenz_rhs(state, sigma, rho, beta):
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def _rk4(f, state, h):
    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    return state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def lorenz_trajectory(n_samples, dt, sigma=10.0, rho=28.0, beta=8.0 / 3.0, substeps=4,
                      rng=None, burn_in=20.0):
    """RK4 integration of Lorenz-63, sampled every `dt` time units.

    Returns
    -------
    ndarray, shape (n_samples, 3)
    """
    rng = np.random.default_rng(0) if rng is None else rng
    state = np.array([1.0, 1.0, 20.0]) + rng.uniform(-1, 1, 3)
    h = dt / substeps
    f = lambda s: lorenz_rhs(s, sigma, rho, beta)
    for _ in range(int(round(burn_in / h))):
        state = _rk4(f, state, h)
    out = np.empty((n_samples, 3))
    for k in range(n_samples):
        out[k] = state
        for _ in range(substeps):
            state = _rk4(f, state, h)
    return out


def lorenz_benettin(sigma=10.0, rho=28.0, beta=8.0 / 3.0, dt=0.01, t_total=2000.0, burn_in=50.0,
                    seed=0):
    """Largest Lyapunov exponent of Lorenz-63 by tangent-space integration.

    The linearized flow is integrated alongside the trajectory with RK4 and
    the tangent vector is renormalized every step; the exponent is the mean
    log growth per unit time.
    """
    rng = np.random.default_rng(seed)

    def joint(s):
        x, y, z = s[:3]
        v = s[3:]
        jac = np.array([[-sigma, sigma, 0.0], [rho - z, -1.0, -x], [y, x, -beta]])
        return np.concatenate([lorenz_rhs(s[:3], sigma, rho, beta), jac @ v])

    s = np.concatenate([np.array([1.0, 1.0, 20.0]) + rng.uniform(-1, 1, 3), [1.0, 0.0, 0.0]])
    for _ in range(int(round(burn_in / dt))):
        s = _rk4(joint, s, dt)
        s[3:] /= np.linalg.norm(s[3:])
    total = 0.0
    n = int(round(t_total / dt))
    for _ in range(n):
        s = _rk4(joint, s, dt)
        g = np.linalg.norm(s[3:])
        total += np.log(g)
        s[3:] /= g
    return total / (n * dt)


def generate(spec):
    """Sample the plant described by `spec`.

    Each mode starts with a random phase and receives velocity kicks at
    Poisson arrival times (rate ``spec.kick_rate_hz``); a kick of size ``a``
    at ``t_k`` adds ``a exp(-zeta w t) sin(w_d t)`` for ``t = t - t_k >= 0``,
    the exact impulse response of the planted oscillator. Noise is white
    with standard deviation ``noise_std`` times each channel's clean RMS.

    Returns
    -------
    SyntheticTruth
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_s / spec.dt))
    t = np.arange(n) * spec.dt
    p = spec.n_sensors
    y = np.zeros((p, n))
    shapes = np.array([m.shape for m in spec.modes], dtype=float).T.reshape(p, len(spec.modes))

    for j, mode in enumerate(spec.modes):
        wn = 2 * np.pi * mode.frequency_hz
        zeta = mode.damping_ratio
        wd = wn * np.sqrt(1 - zeta ** 2)
        a = zeta * wn
        q = mode.amplitude * np.exp(-a * t) * np.cos(wd * t + rng.uniform(0, 2 * np.pi))
        if spec.kick_rate_hz > 0:
            tk = rng.exponential(1.0 / spec.kick_rate_hz)
            while tk < spec.duration_s:
                k0 = int(np.ceil(tk / spec.dt - 1e-9))
                tau = t[k0:] - tk
                size = mode.amplitude * rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
                q[k0:] += size * np.exp(-a * tau) * np.sin(wd * tau)
                tk += rng.exponential(1.0 / spec.kick_rate_hz)
        y += np.outer(shapes[:, j], q)

    structural_rms = np.sqrt(np.mean(y ** 2, axis=1))
    for h in spec.harmonics:
        phase = rng.uniform(0, 2 * np.pi)
        y += np.outer(np.asarray(h.profile, dtype=float),
                      h.amplitude * np.cos(2 * np.pi * h.frequency_hz * t + phase))

    drive = None
    if spec.chaotic_drive is not None:
        c = spec.chaotic_drive
        traj = lorenz_trajectory(n, spec.dt * c.time_scale, c.sigma, c.rho, c.beta,
                                 substeps=c.substeps, rng=rng)
        drive = (traj[:, 0] - traj[:, 0].mean()) / traj[:, 0].std()
        for ch in c.channels:
            y[ch] += c.gain * structural_rms[ch] * drive

    if spec.noise_std > 0:
        rms = np.sqrt(np.mean(y ** 2, axis=1, keepdims=True))
        y += spec.noise_std * rms * rng.standard_normal(y.shape)

    data = TimeSeriesMatrix(
        y, spec.dt,
        channel_names=list(spec.channel_names) if spec.channel_names else None,
        channel_units=list(spec.channel_units) if spec.channel_units else None,
    )
    return SyntheticTruth(data=data, spec=spec, shapes=shapes, drive=drive)


def tower_shapes(n_heights=9):
    """Bending-like shapes for a tower instrumented at `n_heights` levels.

    Returns a dict of unit-norm-per-block 2*n_heights vectors (acceleration
    block then moment block) for the first and second fore-aft and
    side-side modes plus a harmonic load profile. Acceleration follows the
    modal displacement and the base bending moment the curvature-driven
    distribution; first modes are monotone, second modes carry one interior
    node. Side-side modes flip the moment sign so they are distinguishable
    from the fore-aft pair.
    """
    z = np.linspace(10.0, 87.6, n_heights) / 90.0
    unit = lambda v: v / np.linalg.norm(v)
    psi1 = 1 - np.cos(np.pi * z / 2)
    m1 = np.cos(np.pi * z / 2)

    def second(node):
        disp = (1 - np.cos(np.pi * z / 2)) * (z - node) / (1 - node)
        moment = np.cos(np.pi * z / 2) * (node - z) / node
        return unit(disp), unit(moment)

    a_fa2, m_fa2 = second(0.45)
    a_ss2, m_ss2 = second(0.64)
    return {
        "fa1": np.r_[unit(psi1), unit(m1)],
        "ss1": np.r_[unit(psi1), -unit(m1)],
        "fa2": np.r_[a_fa2, m_fa2],
        "ss2": np.r_[a_ss2, -m_ss2],
        "harmonic": np.r_[z, 0.6 * (1 - z)],
    }


PRESET_FREQUENCIES_HZ = (0.541, 0.524, 1.674, 2.042)
PRESET_DAMPING = (0.0302, 0.0582, 0.0509, 0.0180)
PRESET_HARMONIC_HZ = 0.61


def fowt_like_preset(noise_std=0.05, seed=0, chaotic=False, chaos_gain=1.0, duration_s=600.0,
                     dt=0.02, kick_rate_hz=1.0 / 30.0, harmonic_amplitude=0.5):
    """Floating-turbine-like plant: 18 tower sensors, four bending modes.

    Channels 0-8 are acceleration-like, 9-17 bending-moment-like, both
    ordered from the lowest to the highest level. Modes are first/second
    fore-aft and side-side at 0.541, 0.524, 1.674 and 2.042 Hz with 3.02,
    5.82, 5.09 and 1.80 % damping; a 0.61 Hz undamped harmonic stands in
    for blade-passing forcing. With `chaotic`, a Lorenz drive is added to
    every channel.
    """
    s = tower_shapes()
    mode_shapes = (s["fa1"], s["ss1"], s["fa2"], s["ss2"])
    amps = (1.0, 1.0, 0.5, 0.5)
    modes = tuple(ModeSpec(f, z, tuple(float(v) for v in shape), a)
                  for f, z, shape, a in zip(PRESET_FREQUENCIES_HZ, PRESET_DAMPING, mode_shapes, amps))
    harmonics = (HarmonicSpec(PRESET_HARMONIC_HZ, harmonic_amplitude,
                              tuple(float(v) for v in s["harmonic"])),)
    drive = ChaoticDrive(gain=chaos_gain, channels=tuple(range(18))) if chaotic else None
    names = tuple([f"acc_{i}" for i in range(9)] + [f"mom_{i}" for i in range(9)])
    units = tuple(["m/s^2"] * 9 + ["kN*m"] * 9)
    return SyntheticPlantSpec(
        n_sensors=18, modes=modes, harmonics=harmonics, noise_std=noise_std,
        chaotic_drive=drive, dt=dt, duration_s=duration_s, seed=seed, kick_rate_hz=kick_rate_hz,
        channel_names=names, channel_units=units)
