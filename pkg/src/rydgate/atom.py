"""Per-atom level structure and the two-atom Hamiltonian.

Model: each atom carries ten levels in a frame rotating at its drive
frequency.  The drive couples q1 to the target Rydberg state and its
(n +/- 1)p_{3/2} neighbours, and q0 to the n'p and n''p leakage states; the
auxiliary sink g couples to nothing.  A constant drive detuning Lambda enters
as a -Lambda shift of every Rydberg diagonal of the driven atom.  Blockade
shifts sit on the doubly-Rydberg diagonal of the composite system.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .params import RYDBERG_LABELS, PhysicalSetting

#: Canonical per-atom level ordering; composite index = 10 * control + target.
LEVELS = ("g", "q0", "q1") + RYDBERG_LABELS
LEVEL_INDEX = {label: i for i, label in enumerate(LEVELS)}
N_LEVELS = len(LEVELS)
DIM = N_LEVELS * N_LEVELS

#: Which qubit state the drive couples each Rydberg level to.
DRIVE_SOURCE = {
    "r_target": "q1", "r_plus": "q1", "r_minus": "q1",
    "r_p1h": "q0", "r_p3h": "q0", "r_pp1h": "q0", "r_pp3h": "q0",
}

#: Blockade pair-label key for each Rydberg level.
BLOCKADE_KEY = {
    "r_target": "n", "r_plus": "nplus", "r_minus": "nminus",
    "r_p1h": "nprime", "r_p3h": "nprime",
    "r_pp1h": "ndprime", "r_pp3h": "ndprime",
}

#: Computational basis |ij> (control, target) positions in the composite space.
COMP_LABELS = (("q0", "q0"), ("q0", "q1"), ("q1", "q0"), ("q1", "q1"))
COMP_INDICES = tuple(
    N_LEVELS * LEVEL_INDEX[c] + LEVEL_INDEX[t] for c, t in COMP_LABELS
)


def composite_index(control_level: int, target_level: int) -> int:
    return N_LEVELS * control_level + target_level


@dataclass(frozen=True)
class AtomLevel:
    label: str
    rot_detuning: float      # rotating-frame diagonal energy (rad/ns)
    rabi_weight: float       # coupling relative to the target transition
    source: str | None       # qubit state the drive couples from (None: undriven)
    decay_rate: float        # Gamma (1/ns); zero for non-Rydberg levels


@dataclass(frozen=True)
class AtomBasis:
    """Ordered ten-level basis; ordering is fixed so indices are reproducible."""

    levels: tuple[AtomLevel, ...]

    def index(self, label: str) -> int:
        return LEVEL_INDEX[label]

    def level(self, label: str) -> AtomLevel:
        return self.levels[LEVEL_INDEX[label]]


def _pqn(setting: PhysicalSetting, label: str) -> int:
    return {
        "r_target": setting.n,
        "r_plus": setting.n + 1,
        "r_minus": setting.n - 1,
        "r_p1h": setting.n_prime, "r_p3h": setting.n_prime,
        "r_pp1h": setting.n_dprime, "r_pp3h": setting.n_dprime,
    }[label]


@lru_cache(maxsize=64)
def build_basis(setting: PhysicalSetting) -> AtomBasis:
    """Ten-level basis with detunings, (n/n_r)^{3/2} Rabi weights, decay rates."""
    detunings = {
        "r_target": 0.0,
        "r_plus": setting.delta_plus,
        "r_minus": setting.delta_minus,
        "r_p1h": setting.delta_p1_half,
        "r_p3h": setting.delta_p3_half,
        "r_pp1h": setting.delta_pp1_half,
        "r_pp3h": setting.delta_pp3_half,
    }
    levels = [
        AtomLevel("g", 0.0, 0.0, None, 0.0),
        AtomLevel("q0", 0.0, 0.0, None, 0.0),
        AtomLevel("q1", 0.0, 0.0, None, 0.0),
    ]
    for label in RYDBERG_LABELS:
        weight = (setting.n / _pqn(setting, label)) ** 1.5
        if label in ("r_p1h", "r_pp1h"):
            weight *= setting.p_half_suppression
        gamma = 1.0 / (setting.lifetime_us(label) * 1e3)  # us -> ns
        levels.append(AtomLevel(label, detunings[label], weight,
                                DRIVE_SOURCE[label], gamma))
    return AtomBasis(levels=tuple(levels))


def relative_blockade(setting: PhysicalSetting, key1: str, key2: str) -> float:
    """Relative blockade b for a pair of Rydberg states given by pair keys.

    Tabulated pairs (always involving the target state n) are used directly;
    pairs of two leakage states default to the product b_{n,k1} * b_{n,k2},
    overridable through extra b_<k1>_<k2> entries in a setting file.
    """
    pairs = setting.rel_blockade_map
    direct = pairs.get(f"{key1}_{key2}", pairs.get(f"{key2}_{key1}"))
    if direct is not None:
        return direct

    def single(key):
        if key == "n":
            return pairs["n_n"]
        return pairs[f"n_{key}"]

    return single(key1) * single(key2)


@dataclass(frozen=True, eq=False)
class CompositeHamiltonian:
    """Drift plus drive coupling patterns of the two-atom system.

    ``drift`` is the constant real-diagonal part (detunings and blockade
    shifts).  The instantaneous Hamiltonian is
    drift + eps_c(t) * drive_control + eps_t(t) * drive_target.
    """

    dimension: int
    drift: np.ndarray          # (100, 100) real diagonal
    drive_control: np.ndarray  # (100, 100) Hermitian, zero diagonal
    drive_target: np.ndarray

    def drift_diagonal(self) -> np.ndarray:
        return np.diagonal(self.drift).copy()


def single_atom_drive(basis: AtomBasis) -> np.ndarray:
    """10x10 pattern with weight w_r/2 between each Rydberg level and its source."""
    pattern = np.zeros((N_LEVELS, N_LEVELS))
    for level in basis.levels:
        if level.source is None:
            continue
        i, j = LEVEL_INDEX[level.label], LEVEL_INDEX[level.source]
        pattern[i, j] = pattern[j, i] = 0.5 * level.rabi_weight
    return pattern


def build_composite(setting: PhysicalSetting, basis_c: AtomBasis,
                    basis_t: AtomBasis, lambda_c: float = 0.0,
                    lambda_t: float = 0.0) -> CompositeHamiltonian:
    """Assemble drift and drive patterns for one pulse segment.

    lambda_c / lambda_t are the constant drive detunings active during the
    segment; each shifts every Rydberg diagonal of its own atom by -Lambda.
    """
    if basis_c != basis_t:
        raise ConfigError("control and target bases must come from the same setting")
    if not (math.isfinite(lambda_c) and math.isfinite(lambda_t)):
        raise ConfigError("drive detunings must be finite")

    def diag_of(basis, lam):
        d = np.zeros(N_LEVELS)
        for i, level in enumerate(basis.levels):
            d[i] = level.rot_detuning - (lam if level.label in RYDBERG_LABELS else 0.0)
        return d

    diag_c = diag_of(basis_c, lambda_c)
    diag_t = diag_of(basis_t, lambda_t)
    drift_diag = (diag_c[:, None] + diag_t[None, :]).ravel()

    for lc in RYDBERG_LABELS:
        for lt in RYDBERG_LABELS:
            idx = composite_index(LEVEL_INDEX[lc], LEVEL_INDEX[lt])
            b = relative_blockade(setting, BLOCKADE_KEY[lc], BLOCKADE_KEY[lt])
            drift_diag[idx] += b * setting.b0

    eye = np.eye(N_LEVELS)
    drive_c = np.kron(single_atom_drive(basis_c), eye)
    drive_t = np.kron(eye, single_atom_drive(basis_t))
    return CompositeHamiltonian(
        dimension=DIM,
        drift=np.diag(drift_diag),
        drive_control=drive_c,
        drive_target=drive_t,
    )


def hamiltonian_at(h: CompositeHamiltonian, eps_c: float, eps_t: float) -> np.ndarray:
    """Instantaneous Hamiltonian for given envelope values (always Hermitian)."""
    return h.drift + eps_c * h.drive_control + eps_t * h.drive_target


def dump_composite(h: CompositeHamiltonian, diag_path, drive_path) -> None:
    """Debug dump: diagonal entries plus sparse triplets of the drive patterns."""
    with open(diag_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "control_level", "target_level", "drift_rad_per_ns"])
        diag = h.drift_diagonal()
        for idx in range(h.dimension):
            ic, it = divmod(idx, N_LEVELS)
            writer.writerow([idx, LEVELS[ic], LEVELS[it], f"{diag[idx]:.12g}"])
    with open(drive_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pattern", "row", "col", "value"])
        for name, mat in (("control", h.drive_control), ("target", h.drive_target)):
            rows, cols = np.nonzero(mat)
            for r, c in zip(rows, cols):
                writer.writerow([name, int(r), int(c), f"{mat[r, c]:.12g}"])
