"""Physical settings, unit conversions, and setting-override files.

Internal convention everywhere in the package: time in ns, angular frequency
in rad/ns, hbar = 1.  Tabulated inputs quote linear frequencies in GHz (the
"omega/2pi" convention) and lifetimes in microseconds; conversion happens once,
when a :class:`PhysicalSetting` is constructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

#: Rydberg-level labels in canonical order.  The full ten-level per-atom basis
#: prepends g, q0, q1 (see :mod:`rydgate.atom`).
RYDBERG_LABELS = (
    "r_target",   # np_{3/2}, the resonantly driven Rydberg state
    "r_plus",     # (n+1)p_{3/2}
    "r_minus",    # (n-1)p_{3/2}
    "r_p1h",      # n'p_{1/2}
    "r_p3h",      # n'p_{3/2}
    "r_pp1h",     # n''p_{1/2}
    "r_pp3h",     # n''p_{3/2}
)

#: Single-state keys used in relative-blockade pair labels.
BLOCKADE_KEYS = ("n", "nprime", "ndprime", "nplus", "nminus")

_REQUIRED_PAIRS = ("n_n", "n_nprime", "n_ndprime", "n_nplus", "n_nminus")

# Builtin excitation schemes for Cs one-photon excitation at 300 K.
# Linear frequencies in GHz, lifetimes in microseconds.
_BUILTIN = {
    "S1": {
        "n": 107, "n_prime": 106, "n_dprime": 105,
        "tau_n_us": 538.0,
        "delta_plus_GHz": -5.534, "delta_minus_GHz": 5.694,
        "delta_p1_half_GHz": -2.961, "delta_p3_half_GHz": -3.161,
        "delta_pp1_half_GHz": 3.256, "delta_pp3_half_GHz": 3.051,
        "b0_GHz": 1.54,
        "b_n_n": 1.0, "b_n_nprime": 0.85, "b_n_ndprime": 0.80,
        "b_n_nplus": 1.02, "b_n_nminus": 0.97,
        "omega_q_GHz": 9.1926,
    },
    "S2": {
        "n": 141, "n_prime": 138, "n_dprime": 137,
        "tau_n_us": 969.0,
        "delta_plus_GHz": -2.507, "delta_minus_GHz": 2.562,
        "delta_p1_half_GHz": -1.245, "delta_p3_half_GHz": -1.333,
        "delta_pp1_half_GHz": 1.495, "delta_pp3_half_GHz": 1.405,
        "b0_GHz": 0.68,
        "b_n_n": 1.0, "b_n_nprime": 0.85, "b_n_ndprime": 0.80,
        "b_n_nplus": 1.02, "b_n_nminus": 0.97,
        "omega_q_GHz": 9.1926,
    },
}

#: Ratio of Rabi couplings to p_{1/2} versus p_{3/2} states (anomalously small
#: s-p_{1/2} oscillator strength in Cs).
DEFAULT_P_HALF_SUPPRESSION = 1.0 / 300.0

#: Spontaneous-emission branching: fraction into the auxiliary sink level g and
#: into each qubit state.
DEFAULT_BRANCHING = (7.0 / 8.0, 1.0 / 16.0, 1.0 / 16.0)

_INT_KEYS = ("n", "n_prime", "n_dprime")
_GHZ_KEYS = (
    "delta_plus_GHz", "delta_minus_GHz",
    "delta_p1_half_GHz", "delta_p3_half_GHz",
    "delta_pp1_half_GHz", "delta_pp3_half_GHz",
    "b0_GHz", "omega_q_GHz",
)
_DETUNING_KEYS = _GHZ_KEYS[:6]


def ghz_to_angular(f_ghz: float) -> float:
    """Convert a linear frequency in GHz to angular frequency in rad/ns."""
    return TWO_PI * f_ghz


def angular_to_ghz(omega: float) -> float:
    """Inverse of :func:`ghz_to_angular`."""
    return omega / TWO_PI


@dataclass(frozen=True)
class PhysicalSetting:
    """All parameters of one excitation scheme, in internal units.

    Frequencies are angular (rad/ns); lifetimes stay in microseconds as
    tabulated and are converted to decay rates at use sites.  Instances are
    immutable and safe to share between concurrent tasks.
    """

    name: str
    n: int
    n_prime: int
    n_dprime: int
    tau_n: float                  # target Rydberg lifetime (us)
    delta_plus: float             # (n+1)p_{3/2} detuning (rad/ns)
    delta_minus: float            # (n-1)p_{3/2} detuning (rad/ns)
    delta_p1_half: float          # n'p_{1/2} detuning (rad/ns)
    delta_p3_half: float          # n'p_{3/2} detuning (rad/ns)
    delta_pp1_half: float         # n''p_{1/2} detuning (rad/ns)
    delta_pp3_half: float         # n''p_{3/2} detuning (rad/ns)
    b0: float                     # blockade shift of the target pair (rad/ns)
    rel_blockades: tuple[tuple[str, float], ...]
    p_half_suppression: float
    omega_q: float                # qubit hyperfine splitting (rad/ns)
    decay_branch_g: float = DEFAULT_BRANCHING[0]
    decay_branch_0: float = DEFAULT_BRANCHING[1]
    decay_branch_1: float = DEFAULT_BRANCHING[2]
    #: optional per-level lifetime overrides, (rydberg label, us)
    lifetime_overrides: tuple[tuple[str, float], ...] = ()
    #: raw tabulated values (GHz / us / dimensionless) this setting was built
    #: from; kept so reports round-trip to the quoted numbers exactly
    table: tuple[tuple[str, float], ...] = ()

    @property
    def rel_blockade_map(self) -> dict[str, float]:
        return dict(self.rel_blockades)

    def lifetime_us(self, label: str) -> float:
        """Lifetime of one Rydberg level in microseconds."""
        return dict(self.lifetime_overrides).get(label, self.tau_n)

    def as_table(self) -> dict[str, float]:
        """Raw tabulated values (GHz, us) used to build this setting."""
        return dict(self.table)


def _validate(s: PhysicalSetting) -> PhysicalSetting:
    if s.tau_n <= 0.0:
        raise ConfigError("tau_n_us must be strictly positive")
    for label, tau in s.lifetime_overrides:
        if label not in RYDBERG_LABELS:
            raise ConfigError(f"unknown Rydberg label in lifetime override: {label!r}")
        if tau <= 0.0:
            raise ConfigError(f"tau_{label}_us must be strictly positive")
    for key, value in (
        ("delta_plus_GHz", s.delta_plus),
        ("delta_minus_GHz", s.delta_minus),
        ("delta_p1_half_GHz", s.delta_p1_half),
        ("delta_p3_half_GHz", s.delta_p3_half),
        ("delta_pp1_half_GHz", s.delta_pp1_half),
        ("delta_pp3_half_GHz", s.delta_pp3_half),
    ):
        if not math.isfinite(value) or value == 0.0:
            raise ConfigError(f"{key} must be finite and nonzero")
    if not math.isfinite(s.b0) or s.b0 < 0.0:
        raise ConfigError("b0_GHz must be finite and non-negative")
    if s.omega_q <= 0.0:
        raise ConfigError("omega_q_GHz must be positive")
    if s.p_half_suppression < 0.0:
        raise ConfigError("p_half_suppression must be non-negative")
    branches = (s.decay_branch_g, s.decay_branch_0, s.decay_branch_1)
    if any(b < 0.0 or b > 1.0 for b in branches):
        raise ConfigError("decay branching fractions must lie in [0, 1]")
    if abs(sum(branches) - 1.0) > 1e-15:
        raise ConfigError("decay branching fractions must sum to 1")
    pairs = s.rel_blockade_map
    for pair in _REQUIRED_PAIRS:
        if pair not in pairs:
            raise ConfigError(f"rel_blockades is missing required pair b_{pair}")
    for pair, value in pairs.items():
        if not math.isfinite(value):
            raise ConfigError(f"b_{pair} must be finite")
    return s


def _from_raw(name, raw, p_half=DEFAULT_P_HALF_SUPPRESSION,
              branching=DEFAULT_BRANCHING, lifetime_overrides=(),
              extra_blockades=()):
    """Build and validate a setting from raw tabulated (GHz, us) values."""
    blockades = [(k[2:], raw[k]) for k in raw if k.startswith("b_") and k != "b0_GHz"]
    blockades.extend(extra_blockades)
    setting = PhysicalSetting(
        name=name,
        n=int(raw["n"]), n_prime=int(raw["n_prime"]), n_dprime=int(raw["n_dprime"]),
        tau_n=float(raw["tau_n_us"]),
        delta_plus=ghz_to_angular(raw["delta_plus_GHz"]),
        delta_minus=ghz_to_angular(raw["delta_minus_GHz"]),
        delta_p1_half=ghz_to_angular(raw["delta_p1_half_GHz"]),
        delta_p3_half=ghz_to_angular(raw["delta_p3_half_GHz"]),
        delta_pp1_half=ghz_to_angular(raw["delta_pp1_half_GHz"]),
        delta_pp3_half=ghz_to_angular(raw["delta_pp3_half_GHz"]),
        b0=ghz_to_angular(raw["b0_GHz"]),
        rel_blockades=tuple(blockades),
        p_half_suppression=p_half,
        omega_q=ghz_to_angular(raw["omega_q_GHz"]),
        decay_branch_g=branching[0],
        decay_branch_0=branching[1],
        decay_branch_1=branching[2],
        lifetime_overrides=tuple(lifetime_overrides),
        table=tuple(sorted(raw.items())),
    )
    return _validate(setting)


def available_settings() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN))


def load_setting(name: str) -> PhysicalSetting:
    """Return a validated builtin setting by name ("S1" or "S2")."""
    if name not in _BUILTIN:
        raise ConfigError(
            f"unknown setting {name!r}; available settings: "
            + ", ".join(available_settings())
        )
    return _from_raw(name, dict(_BUILTIN[name]))


def load_setting_file(path) -> PhysicalSetting:
    """Load a setting-override file.

    The file is flat ``key = value`` text with ``#`` comments.  It must name a
    builtin base setting via ``base = S1`` (or S2); every other key overrides
    that base.  All frequencies in the file are linear-frequency GHz, as in
    the builtin tables.  Recognized keys::

        base, name, n, n_prime, n_dprime, tau_n_us,
        delta_plus_GHz, delta_minus_GHz,
        delta_p1_half_GHz, delta_p3_half_GHz,
        delta_pp1_half_GHz, delta_pp3_half_GHz,
        b0_GHz, omega_q_GHz, p_half_suppression,
        decay_branch_g, decay_branch_0, decay_branch_1,
        b_<i>_<j>        relative blockade for a state pair, e.g. b_n_nprime
                         or b_nprime_ndprime (states: n, nprime, ndprime,
                         nplus, nminus)
        tau_<label>_us   per-level lifetime override, e.g. tau_r_plus_us
    """
    entries = _parse_kv_file(path)
    if "base" not in entries:
        raise ConfigError(f"{path}: missing required key 'base'")
    base = entries.pop("base")
    if base not in _BUILTIN:
        raise ConfigError(
            f"{path}: unknown base setting {base!r}; available: "
            + ", ".join(available_settings())
        )
    raw = dict(_BUILTIN[base])
    name = entries.pop("name", base)
    p_half = DEFAULT_P_HALF_SUPPRESSION
    branching = list(DEFAULT_BRANCHING)
    overrides = {}
    extra_blockades = []

    for key, text in entries.items():
        if key in _INT_KEYS:
            raw[key] = _parse_number(path, key, text, int)
        elif key in raw and key != "b0_GHz" and not key.startswith("b_"):
            raw[key] = _parse_number(path, key, text, float)
        elif key in ("b0_GHz", "tau_n_us", "omega_q_GHz"):
            raw[key] = _parse_number(path, key, text, float)
        elif key == "p_half_suppression":
            p_half = _parse_number(path, key, text, float)
        elif key == "decay_branch_g":
            branching[0] = _parse_number(path, key, text, float)
        elif key == "decay_branch_0":
            branching[1] = _parse_number(path, key, text, float)
        elif key == "decay_branch_1":
            branching[2] = _parse_number(path, key, text, float)
        elif key.startswith("b_"):
            pair = key[2:]
            states = pair.split("_")
            if len(states) != 2 or any(st not in BLOCKADE_KEYS for st in states):
                raise ConfigError(f"{path}: malformed blockade key {key!r}")
            value = _parse_number(path, key, text, float)
            if f"b_{pair}" in raw:
                raw[f"b_{pair}"] = value
            else:
                extra_blockades.append((pair, value))
        elif key.startswith("tau_") and key.endswith("_us"):
            label = key[4:-3]
            if label not in RYDBERG_LABELS:
                raise ConfigError(f"{path}: unknown Rydberg label in key {key!r}")
            overrides[label] = _parse_number(path, key, text, float)
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")

    return _from_raw(name, raw, p_half=p_half, branching=tuple(branching),
                     lifetime_overrides=tuple(sorted(overrides.items())),
                     extra_blockades=tuple(extra_blockades))


def _parse_number(path, key, text, cast):
    try:
        return cast(text)
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse value for key {key!r}: {text!r}") from exc


def _parse_kv_file(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return entries


def with_b0(setting: PhysicalSetting, b0_ghz: float) -> PhysicalSetting:
    """Derived setting with a different blockade shift (used in sweeps)."""
    table = tuple((k, b0_ghz if k == "b0_GHz" else v) for k, v in setting.table)
    return _validate(replace(setting, b0=ghz_to_angular(b0_ghz), table=table))


def scale_lifetimes(setting: PhysicalSetting, factor: float) -> PhysicalSetting:
    """Derived setting with all Rydberg lifetimes multiplied by ``factor``.

    factor = 100 is a convenient 4 K proxy for the builtin 300 K lifetimes.
    """
    if factor <= 0.0:
        raise ConfigError("lifetime scale factor must be positive")
    table = tuple((k, factor * v if k == "tau_n_us" else v) for k, v in setting.table)
    overrides = tuple((lab, factor * tau) for lab, tau in setting.lifetime_overrides)
    return _validate(replace(setting, tau_n=factor * setting.tau_n,
                             lifetime_overrides=overrides, table=table))
